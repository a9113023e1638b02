"""Command-line front end: ``ttagsim run | compare | sweep | gen-trace``.

Exit status: 0 success, 2 usage error, 3 configuration error, 4 trace error,
5 energy calibration error, 6 output I/O error.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import sys
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

from .config import ConfigError, ExperimentConfig, load_config, validate
from .energy import CalibrationError
from .metrics import RunMetrics, mean_of_ratios, ratio_of_sums
from .schemes import BASELINE, THREE_RSET, SchemeConfig
from .simulator import compare_schemes, parse_m_range, simulate, load_arrays, sweep_split
from .workload import GENERATORS, SyntheticSpec, TraceError, generate, write_trace

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_TRACE = 4
EXIT_CALIBRATION = 5
EXIT_IO = 6


def demo_trace_path() -> Path:
    return Path(str(resources.files("ttagsim") / "data" / "demo.trace"))


class OutputError(OSError):
    pass


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="INI experiment file")
    p.add_argument("--trace", type=Path, action="append",
                   help="trace file (repeat for several workloads in compare)")
    p.add_argument("--demo", action="store_true", help="use the bundled demo trace")
    p.add_argument("--out", type=Path, help="output directory (fallback: $TTAGSIM_OUT)")
    p.add_argument("--jobs", type=int, help="parallel simulation processes")
    p.add_argument("--warmup", type=int, help="accesses excluded from aggregates")
    p.add_argument("--engine", choices=("auto", "python", "compiled"))
    _add_synthetic(p)


def _add_synthetic(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("synthetic trace")
    g.add_argument("--generator", choices=GENERATORS)
    g.add_argument("--num-accesses", type=int)
    g.add_argument("--seed", type=int)
    g.add_argument("--read-fraction", type=float)
    g.add_argument("--footprint-blocks", type=int)
    g.add_argument("--stride", type=int)
    g.add_argument("--repeat", type=int)
    g.add_argument("--zipf-alpha", type=float)
    g.add_argument("--working-set-blocks", type=int)
    g.add_argument("--churn-rate", type=float)


_SYNTHETIC_FLAGS = (
    "num_accesses", "seed", "read_fraction", "footprint_blocks", "stride",
    "repeat", "zipf_alpha", "working_set_blocks", "churn_rate",
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ttagsim",
        description="Trace-driven STT-MRAM tag-array read-disturbance simulator.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate one scheme")
    _add_common(run)
    run.add_argument("--scheme", choices=("baseline", "3rset", "waypred"))
    run.add_argument("--split-bits", type=int)
    run.add_argument("--with-baseline", action="store_true",
                     help="also run the baseline and report normalized figures")

    compare = sub.add_parser("compare", help="run several schemes on identical traces")
    _add_common(compare)
    compare.add_argument("--schemes", default="baseline,3rset,waypred",
                         help="comma list; 3rset:M selects a split point")
    compare.add_argument("--split-bits", type=int)

    sweep = sub.add_parser("sweep", help="sweep the 3RSeT split point")
    _add_common(sweep)
    sweep.add_argument("--m-range", default="1..10", help="inclusive range a..b")

    gen = sub.add_parser("gen-trace", help="write a synthetic trace file")
    _add_synthetic(gen)
    gen.add_argument("--config", type=Path)
    gen.add_argument("-o", "--output", type=Path, required=True)
    return parser


def _synthetic_from_args(args, base: Optional[SyntheticSpec]) -> Optional[SyntheticSpec]:
    overrides = {k: getattr(args, k) for k in _SYNTHETIC_FLAGS if getattr(args, k) is not None}
    if args.generator is not None:
        overrides["generator"] = args.generator
    if base is None and not overrides:
        return None
    try:
        return dataclasses.replace(base or SyntheticSpec(), **overrides)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _resolve(args) -> ExperimentConfig:
    config = load_config(args.config)
    if getattr(args, "scheme", None) is not None or getattr(args, "split_bits", None) is not None:
        try:
            config.scheme = SchemeConfig(
                args.scheme if getattr(args, "scheme", None) else config.scheme.kind,
                args.split_bits if args.split_bits is not None else config.scheme.split_bits,
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    if args.out is not None:
        config.out_dir = args.out
    if args.jobs is not None:
        config.jobs = args.jobs
    if args.warmup is not None:
        config.warmup = args.warmup
    if args.engine is not None:
        config.engine = args.engine
    if args.demo:
        config.trace = demo_trace_path()
    elif args.trace:
        config.trace = args.trace[0]
    else:
        base = config.trace if isinstance(config.trace, SyntheticSpec) else None
        synthetic = _synthetic_from_args(args, base)
        if synthetic is not None:
            config.trace = synthetic
    if config.trace is None:
        raise ConfigError("no trace: give --trace, --demo, --generator, or a [trace] section")
    if isinstance(config.trace, Path) and not config.trace.is_file():
        raise TraceError(f"trace file {config.trace} does not exist")
    validate(config)
    return config


def _workloads(args, config: ExperimentConfig) -> list[tuple[str, object]]:
    if args.trace and len(args.trace) > 1 and not args.demo:
        for path in args.trace:
            if not path.is_file():
                raise TraceError(f"trace file {path} does not exist")
        return [(path.stem, path) for path in args.trace]
    return [(_workload_name(config.trace), config.trace)]


def _workload_name(trace) -> str:
    if isinstance(trace, SyntheticSpec):
        return f"{trace.generator}-seed{trace.seed}"
    return Path(trace).stem


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path: Path, header: Sequence[str], rows) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([_fmt(v) for v in row])
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from None


def write_metrics_csv(path: Path, runs: Sequence[tuple[str, RunMetrics]],
                      extra: Optional[Sequence[dict]] = None) -> None:
    rows = []
    for i, (workload, run) in enumerate(runs):
        row = {"workload": workload, **run.scalars()}
        if extra is not None:
            row.update(extra[i])
        rows.append(row)
    header = list(rows[0])
    _write_csv(path, header, ([r[h] for h in header] for r in rows))


def write_histogram_csv(path: Path, histogram) -> None:
    _write_csv(path, ("gap_length", "count"), sorted(histogram.items()))


def _normalized(run: RunMetrics, base: RunMetrics) -> dict:
    def ratio(a, b):
        return a / b if b else float("nan")
    return {
        "normalized_bits": ratio(run.bits_read_total, base.bits_read_total),
        "normalized_mttf": ratio(run.mttf_seconds, base.mttf_seconds),
        "normalized_energy": ratio(run.energy_joules, base.energy_joules),
    }


def _simulate(config: ExperimentConfig, scheme: SchemeConfig) -> RunMetrics:
    trace = load_arrays(config.trace, config.geometry.address_bits)
    return simulate(
        trace, config.geometry, scheme, config.technology.p_bit_read_disturb,
        config.access_period_s, config.energy, config.warmup, engine=config.engine,
    ).metrics


def _print_summary(run: RunMetrics, geometry, base: Optional[RunMetrics] = None) -> None:
    label = run.scheme if run.split_bits is None else f"{run.scheme}({run.split_bits})"
    print(f"scheme            {label}")
    print(f"accesses          {run.total_accesses}")
    print(f"hit rate          {run.hit_rate:.4f}")
    print(f"mean valid ways   {run.mean_valid_ways:.4f}")
    print(f"bits/access       {run.bits_per_access:.4f}  (tag bits {geometry.tag_bits})")
    if run.scheme == THREE_RSET:
        print(f"partial matches   hit {run.avg_partial_matches_hit:.4f}  "
              f"miss {run.avg_partial_matches_miss:.4f}")
    if run.scheme == "waypred":
        print(f"prediction acc.   {run.prediction_accuracy:.4f}")
    print(f"MTTF              {run.mttf_seconds:.6g} s")
    print(f"energy            {run.energy_joules:.6g} J ({run.energy_per_access_j:.6g} J/access)")
    if base is not None:
        norm = _normalized(run, base)
        print(f"vs baseline       bits {norm['normalized_bits']:.4f}  "
              f"MTTF {norm['normalized_mttf']:.4f}x  energy {norm['normalized_energy']:.4f}")


def cmd_run(args) -> int:
    config = _resolve(args)
    out = config.resolved_out_dir()
    run = _simulate(config, config.scheme)
    base = None
    runs = [(_workload_name(config.trace), run)]
    if args.with_baseline and config.scheme.kind != BASELINE:
        base = _simulate(config, SchemeConfig(BASELINE))
        runs.insert(0, (runs[0][0], base))
    write_metrics_csv(out / "metrics.csv", runs)
    write_histogram_csv(out / "tag_gaps.csv", run.tag_gaps)
    write_histogram_csv(out / "data_gaps.csv", run.data_gaps)
    _print_summary(run, config.geometry, base)
    print(f"wrote {out}/metrics.csv, tag_gaps.csv, data_gaps.csv")
    return EXIT_OK


def parse_scheme_list(text: str, default_split: int) -> list[SchemeConfig]:
    schemes = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        kind, _, m = item.partition(":")
        schemes.append(SchemeConfig(kind, int(m) if m else default_split))
    return schemes


def cmd_compare(args) -> int:
    config = _resolve(args)
    out = config.resolved_out_dir()
    try:
        schemes = parse_scheme_list(args.schemes, config.scheme.split_bits)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if not any(s.kind == BASELINE for s in schemes) or len(schemes) < 2:
        raise ConfigError("compare needs at least two schemes including baseline")
    schemes.sort(key=lambda s: s.kind != BASELINE)

    rows, extras, per_scheme = [], [], {s.label: [] for s in schemes}
    for name, source in _workloads(args, config):
        runs = compare_schemes(
            source, schemes, config.geometry, config.technology.p_bit_read_disturb,
            config.access_period_s, config.energy, config.warmup, config.jobs, config.engine,
        )
        base = runs[0]
        for scheme, run in zip(schemes, runs):
            rows.append((name, run))
            extras.append(_normalized(run, base))
            per_scheme[scheme.label].append((run, base))
    write_metrics_csv(out / "compare.csv", rows, extras)

    summary = []
    for label, pairs in per_scheme.items():
        runs = [r for r, _ in pairs]
        bases = [b for _, b in pairs]
        summary.append((
            label,
            ratio_of_sums([r.bits_read_total for r in runs], [b.bits_read_total for b in bases]),
            mean_of_ratios([r.bits_read_total for r in runs], [b.bits_read_total for b in bases]),
            # MTTF scales with 1/bits at equal simulated time
            ratio_of_sums([b.bits_read_total for b in bases], [r.bits_read_total for r in runs]),
            mean_of_ratios([r.mttf_seconds for r in runs], [b.mttf_seconds for b in bases]),
            ratio_of_sums([r.energy_joules for r in runs], [b.energy_joules for b in bases]),
            mean_of_ratios([r.energy_joules for r in runs], [b.energy_joules for b in bases]),
        ))
    _write_csv(
        out / "compare_summary.csv",
        ("scheme", "bits_ratio_of_sums", "bits_mean_of_ratios", "mttf_ratio_of_sums",
         "mttf_mean_of_ratios", "energy_ratio_of_sums", "energy_mean_of_ratios"),
        summary,
    )
    print(f"{'scheme':<12} {'bits':>8} {'MTTF':>8} {'energy':>8}   (normalized to baseline)")
    for row in summary:
        print(f"{row[0]:<12} {row[1]:>8.4f} {row[4]:>7.3f}x {row[5]:>8.4f}")
    print(f"wrote {out}/compare.csv, compare_summary.csv")
    return EXIT_OK


def cmd_sweep(args) -> int:
    config = _resolve(args)
    out = config.resolved_out_dir()
    try:
        m_range = parse_m_range(args.m_range)
    except ValueError:
        raise ConfigError(f"bad --m-range {args.m_range!r}; expected a..b") from None
    try:
        result = sweep_split(
            config.trace, config.geometry, m_range, config.technology.p_bit_read_disturb,
            config.access_period_s, config.energy, config.warmup, config.jobs, config.engine,
        )
    except ValueError as exc:
        if isinstance(exc, TraceError):
            raise
        raise ConfigError(str(exc)) from None
    _write_csv(
        out / "sweep.csv",
        ("split_bits", "total_bits_read", "bits_per_access", "normalized"),
        [(r.split_bits, r.total_bits_read, r.bits_per_access, r.normalized) for r in result.rows],
    )
    print(f"{'m':>3} {'bits/access':>12} {'normalized':>11}")
    for r in result.rows:
        print(f"{r.split_bits:>3} {r.bits_per_access:>12.4f} {r.normalized:>11.4f}")
    print(f"best split point: {result.best_split}")
    print(f"wrote {out}/sweep.csv")
    return EXIT_OK


def cmd_gen_trace(args) -> int:
    config = load_config(args.config)
    base = config.trace if isinstance(config.trace, SyntheticSpec) else None
    spec = _synthetic_from_args(args, base) or SyntheticSpec()
    header = " ".join(f"{f.name}={getattr(spec, f.name)}" for f in dataclasses.fields(spec))
    try:
        args.output.parent.mkdir(parents=True, exist_ok=True)
        with open(args.output, "w", newline="\n", encoding="ascii") as fh:
            count = write_trace(generate(spec), fh, header=f"ttagsim synthetic trace\n{header}")
    except OSError as exc:
        raise OutputError(f"cannot write {args.output}: {exc}") from None
    print(f"wrote {count} records to {args.output}")
    return EXIT_OK


_COMMANDS = {"run": cmd_run, "compare": cmd_compare, "sweep": cmd_sweep, "gen-trace": cmd_gen_trace}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"ttagsim: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CalibrationError as exc:
        print(f"ttagsim: calibration error: {exc}", file=sys.stderr)
        return EXIT_CALIBRATION
    except TraceError as exc:
        print(f"ttagsim: trace error: {exc}", file=sys.stderr)
        return EXIT_TRACE
    except OutputError as exc:
        print(f"ttagsim: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"ttagsim: trace error: {exc}", file=sys.stderr)
        return EXIT_TRACE


if __name__ == "__main__":
    sys.exit(main())
