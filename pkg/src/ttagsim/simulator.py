"""Trace-driven simulation driver, split-point sweeps and scheme comparisons."""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Iterator, Optional, Sequence, Union

from collections import Counter

import numpy as np

from . import kernel
from .cache import CacheGeometry, TagCache
from .energy import EnergyModel
from .metrics import RunMetrics
from .schemes import (
    BASELINE, THREE_RSET, WAY_PREDICTION, AccessOutcome, SchemeConfig, make_scheme,
)
from .workload import (
    WRITE, SyntheticSpec, TraceArrays, TraceRangeError, TraceRecord, generate,
    generate_arrays, parse_trace, to_arrays,
)

TraceSource = Union[str, os.PathLike, SyntheticSpec, TraceArrays, Sequence[TraceRecord]]
ENGINES = ("auto", "python", "compiled")
_KERNEL_KIND = {
    BASELINE: kernel.KIND_BASELINE,
    THREE_RSET: kernel.KIND_THREE_RSET,
    WAY_PREDICTION: kernel.KIND_WAY_PREDICTION,
}


def open_trace(source: TraceSource, address_bits: int = 48) -> Iterator[TraceRecord]:
    """Fresh record iterator over a trace file, a synthetic spec, or an in-memory trace."""
    if isinstance(source, SyntheticSpec):
        return generate(source)
    if isinstance(source, TraceArrays):
        return source.records()
    if isinstance(source, (str, os.PathLike)):
        return _iter_file(Path(source), address_bits)
    return iter(source)


def load_arrays(source: TraceSource, address_bits: int = 48) -> TraceArrays:
    if isinstance(source, TraceArrays):
        return source
    if isinstance(source, SyntheticSpec):
        return generate_arrays(source)
    return to_arrays(open_trace(source, address_bits))


def _iter_file(path: Path, address_bits: int) -> Iterator[TraceRecord]:
    with open(path, encoding="ascii", newline=None) as fh:
        yield from parse_trace(fh, address_bits)


@dataclass
class SimulationResult:
    metrics: RunMetrics
    cache: TagCache


def simulate(
    trace: Iterable[TraceRecord],
    geometry: CacheGeometry = CacheGeometry(),
    scheme: SchemeConfig = SchemeConfig(),
    p_bit: float = 1e-8,
    access_period_s: float = 1e-9,
    energy_model: Optional[EnergyModel] = None,
    warmup: int = 0,
    on_outcome: Optional[Callable[[AccessOutcome], None]] = None,
    engine: str = "auto",
) -> SimulationResult:
    """Replay ``trace`` through one cache under one tag-access scheme.

    The first ``warmup`` accesses update cache state (and gap statistics) but
    are left out of the per-access aggregates. Stores write the data block but
    only read the tag array; tags are written on fills alone.

    ``engine="python"`` walks the object model access by access and is the
    only engine that can stream outcomes to ``on_outcome``. ``"compiled"``
    replays the same state machine in a numba loop. ``"auto"`` picks the
    compiled loop unless outcomes are requested.
    """
    if engine not in ENGINES:
        raise ValueError(f"unknown engine {engine!r}")
    if engine == "auto":
        engine = "python" if on_outcome is not None or geometry.address_bits > 62 else "compiled"
    if engine == "compiled":
        if on_outcome is not None:
            raise ValueError("the compiled engine cannot stream outcomes")
        return _simulate_compiled(
            trace, geometry, scheme, p_bit, access_period_s, energy_model, warmup
        )

    cache = TagCache(geometry)
    engine = make_scheme(scheme, geometry.tag_bits)
    metrics = RunMetrics(
        scheme=scheme.kind,
        split_bits=scheme.split_bits if scheme.kind == THREE_RSET else None,
        p_bit=p_bit,
        access_period_s=access_period_s,
        energy_model=energy_model,
    )

    offset_bits = geometry.offset_bits
    tag_shift = offset_bits + geometry.index_bits
    set_mask = geometry.num_sets - 1
    limit = 1 << geometry.address_bits
    access = engine.access
    after_access = engine.after_access
    touch_and_fill = cache.touch_and_fill
    record = metrics.record

    remaining_warmup = warmup
    for op, address in trace:
        if not 0 <= address < limit:
            raise TraceRangeError(
                f"address {address:#x} exceeds {geometry.address_bits} address bits"
            )
        tag = address >> tag_shift
        set_index = (address >> offset_bits) & set_mask
        outcome = access(cache, set_index, tag)
        is_write = op == WRITE
        if outcome.hit:
            way = outcome.way
            touch_and_fill(set_index, tag, True, way)
            if is_write:
                cache.data_write(set_index, way)
            else:
                cache.data_read(set_index, way)
        else:
            way = touch_and_fill(set_index, tag, False).way
        after_access(cache, set_index, way)
        if remaining_warmup:
            remaining_warmup -= 1
        else:
            record(outcome, is_write)
        if on_outcome is not None:
            on_outcome(outcome)

    return _finish(cache, metrics)


def _finish(cache: TagCache, metrics: RunMetrics) -> SimulationResult:
    cache.finalize()
    metrics.tag_gaps = cache.gaps.tag.copy()
    metrics.data_gaps = cache.gaps.data.copy()
    metrics.censored_tag_gaps = cache.gaps.censored_tag.copy()
    metrics.censored_data_gaps = cache.gaps.censored_data.copy()
    return SimulationResult(metrics, cache)


def _histogram(values: np.ndarray) -> Counter:
    keys, counts = np.unique(values, return_counts=True)
    return Counter(dict(zip(keys.tolist(), counts.tolist())))


def _simulate_compiled(trace, geometry, scheme, p_bit, access_period_s, energy_model, warmup):
    arrays = trace if isinstance(trace, TraceArrays) else to_arrays(trace)
    limit = 1 << geometry.address_bits
    if len(arrays) and (arrays.addresses.min() < 0 or arrays.addresses.max() >= limit):
        raise TraceRangeError(f"trace address exceeds {geometry.address_bits} address bits")
    split_bits = scheme.split_bits if scheme.kind == THREE_RSET else 1
    if scheme.kind == THREE_RSET and not 1 <= split_bits < geometry.tag_bits:
        raise ValueError(f"split_bits must be in [1, {geometry.tag_bits - 1}], got {split_bits}")
    k = geometry.associativity
    state = kernel.KernelState(geometry.num_sets, k)
    counters, tag_gaps, data_gaps = kernel.replay(
        _KERNEL_KIND[scheme.kind], geometry.tag_bits, split_bits, geometry.offset_bits,
        geometry.num_sets, geometry.index_bits, k,
        np.ascontiguousarray(arrays.addresses, dtype=np.int64),
        np.ascontiguousarray(arrays.is_write, dtype=np.bool_),
        warmup, state,
    )

    cache = TagCache(geometry)
    for set_index, cset in enumerate(cache.sets):
        nvalid = int(state.nvalid[set_index])
        cset.order = state.order[set_index, :nvalid].tolist()
        for w in range(nvalid):
            way = cset.ways[w]
            way.tag = int(state.tags[set_index, w])
            way.valid = True
            way.reads_low = int(state.reads_low[set_index, w])
            way.reads_high = int(state.reads_high[set_index, w])
            way.reads_full = int(state.reads_full[set_index, w])
            way.data_reads = int(state.data_reads[set_index, w])
    cache.predicted_way = [None if p < 0 else int(p) for p in state.predicted.tolist()]
    cache.read_events_issued = int(counters[kernel.C_EVENTS])
    cache.gaps.tag = _histogram(tag_gaps)
    cache.gaps.data = _histogram(data_gaps)

    metrics = RunMetrics(
        scheme=scheme.kind,
        split_bits=scheme.split_bits if scheme.kind == THREE_RSET else None,
        p_bit=p_bit,
        access_period_s=access_period_s,
        energy_model=energy_model,
    )
    c = counters.tolist()
    metrics.total_accesses = c[kernel.C_TOTAL]
    metrics.hits = c[kernel.C_HITS]
    metrics.misses = c[kernel.C_MISSES]
    metrics.reads = c[kernel.C_READS]
    metrics.writes = c[kernel.C_WRITES]
    metrics.bits_read_total = c[kernel.C_BITS]
    metrics.bits_read_step1 = c[kernel.C_BITS1]
    metrics.bits_read_step2 = c[kernel.C_BITS2]
    metrics.bits_read_hit = c[kernel.C_BITS_HIT]
    metrics.bits_read_miss = c[kernel.C_BITS_MISS]
    metrics.bits_compared = c[kernel.C_COMPARED]
    metrics.partial_matches_hit = c[kernel.C_PM_HIT]
    metrics.partial_matches_miss = c[kernel.C_PM_MISS]
    metrics.predictions_correct = c[kernel.C_PRED_OK]
    metrics.valid_ways_sum = c[kernel.C_VALID_SUM]
    return _finish(cache, metrics)


@dataclass(frozen=True)
class RunRequest:
    source: TraceSource
    geometry: CacheGeometry
    scheme: SchemeConfig
    p_bit: float = 1e-8
    access_period_s: float = 1e-9
    energy_model: Optional[EnergyModel] = None
    warmup: int = 0
    engine: str = "auto"


def run_request(request: RunRequest) -> RunMetrics:
    if request.engine == "python":
        trace = open_trace(request.source, request.geometry.address_bits)
    else:
        trace = load_arrays(request.source, request.geometry.address_bits)
    return simulate(
        trace, request.geometry, request.scheme, request.p_bit,
        request.access_period_s, request.energy_model, request.warmup,
        engine=request.engine,
    ).metrics


def run_many(requests: Sequence[RunRequest], jobs: int = 1) -> list[RunMetrics]:
    """Run independent simulations, in worker processes when ``jobs > 1``."""
    if jobs <= 1 or len(requests) <= 1:
        return [run_request(r) for r in requests]
    with ProcessPoolExecutor(max_workers=min(jobs, len(requests))) as pool:
        return list(pool.map(run_request, requests))


def _shareable(source: TraceSource, geometry: CacheGeometry, engine: str) -> TraceSource:
    """Materialize one-shot sources so every run replays the identical trace."""
    if isinstance(source, (SyntheticSpec, TraceArrays)):
        return source
    if isinstance(source, (str, os.PathLike)) and engine == "python":
        return source
    if engine == "python":
        return list(source)
    return load_arrays(source, geometry.address_bits)


@dataclass(frozen=True)
class SweepRow:
    split_bits: int
    total_bits_read: int
    bits_per_access: float
    normalized: float  # relative to the baseline run on the same trace


@dataclass
class SweepResult:
    baseline: RunMetrics
    rows: list[SweepRow]
    runs: list[RunMetrics]

    @property
    def best_split(self) -> int:
        return min(self.rows, key=lambda r: (r.total_bits_read, r.split_bits)).split_bits


def parse_m_range(text: str) -> range:
    """Parse ``a..b`` (inclusive) or a single integer."""
    if ".." in text:
        lo, hi = text.split("..", 1)
        return range(int(lo), int(hi) + 1)
    return range(int(text), int(text) + 1)


def sweep_split(
    source: TraceSource,
    geometry: CacheGeometry = CacheGeometry(),
    m_range: Iterable[int] = range(1, 11),
    p_bit: float = 1e-8,
    access_period_s: float = 1e-9,
    energy_model: Optional[EnergyModel] = None,
    warmup: int = 0,
    jobs: int = 1,
    engine: str = "auto",
) -> SweepResult:
    """Simulate 3RSeT once per split point (plus one baseline run) on the same trace."""
    m_values = list(m_range)
    if not m_values:
        raise ValueError("empty split range")
    for m in m_values:
        if not 1 <= m < geometry.tag_bits:
            raise ValueError(f"split point {m} outside [1, {geometry.tag_bits - 1}]")

    source = _shareable(source, geometry, engine)

    def request(scheme: SchemeConfig) -> RunRequest:
        return RunRequest(
            source, geometry, scheme, p_bit, access_period_s, energy_model, warmup, engine
        )

    requests = [request(SchemeConfig(BASELINE))]
    requests += [request(SchemeConfig(THREE_RSET, m)) for m in m_values]
    baseline, *runs = run_many(requests, jobs)
    if baseline.total_accesses == 0:
        raise ValueError("empty trace")
    rows = [
        SweepRow(
            m, run.bits_read_total, run.bits_per_access,
            run.bits_read_total / baseline.bits_read_total if baseline.bits_read_total else float("nan"),
        )
        for m, run in zip(m_values, runs)
    ]
    return SweepResult(baseline, rows, runs)


def compare_schemes(
    source: TraceSource,
    schemes: Sequence[SchemeConfig],
    geometry: CacheGeometry = CacheGeometry(),
    p_bit: float = 1e-8,
    access_period_s: float = 1e-9,
    energy_model: Optional[EnergyModel] = None,
    warmup: int = 0,
    jobs: int = 1,
    engine: str = "auto",
) -> list[RunMetrics]:
    """Run every scheme on the identical trace; the list must include the baseline."""
    if len(schemes) < 2 or not any(s.kind == BASELINE for s in schemes):
        raise ValueError("comparison needs at least two schemes including the baseline")
    source = _shareable(source, geometry, engine)
    requests = [
        RunRequest(source, geometry, s, p_bit, access_period_s, energy_model, warmup, engine)
        for s in schemes
    ]
    runs = run_many(requests, jobs)
    if runs[0].total_accesses == 0:
        raise ValueError("empty trace")
    return runs
