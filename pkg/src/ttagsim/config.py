"""Experiment configuration: INI file plus command-line overrides.

Sections and keys (all optional)::

    [geometry]    address_bits, cache_bytes, associativity, block_bytes
    [scheme]      scheme = baseline | 3rset | waypred, split_bits
    [technology]  any TechnologyParams field, e.g. p_bit_read_disturb = 1e-8
    [energy]      anchors = 0:0.199, 1:0.328, 2:0.454 ; baseline_joules = 1e-11
                  or e_fixed, e_bit_read, e_bit_cmp, e_step2_way (joules)
    [trace]       path = trace.txt, or generator = uniform plus SyntheticSpec fields
    [run]         access_period_s, warmup, out, jobs, engine
"""
from __future__ import annotations

import configparser
import dataclasses
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Optional, Union

from .cache import CacheGeometry
from .energy import REFERENCE_ANCHORS, BASELINE_ENERGY_J, EnergyModel, calibrate_energy
from .reliability import TechnologyParams
from .schemes import SchemeConfig
from .workload import SyntheticSpec

OUT_ENV_VAR = "TTAGSIM_OUT"
DEFAULT_OUT = "ttagsim-out"


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    geometry: CacheGeometry = field(default_factory=CacheGeometry)
    scheme: SchemeConfig = field(default_factory=SchemeConfig)
    technology: TechnologyParams = field(default_factory=TechnologyParams)
    energy: EnergyModel = field(default_factory=EnergyModel.default)
    trace: Union[Path, SyntheticSpec, None] = None
    access_period_s: float = 1e-9
    warmup: int = 0
    out_dir: Optional[Path] = None
    jobs: int = 1
    engine: str = "auto"

    def resolved_out_dir(self) -> Path:
        if self.out_dir is not None:
            return self.out_dir
        return Path(os.environ.get(OUT_ENV_VAR) or DEFAULT_OUT)


def _coerce(value: str, target: Any) -> Any:
    if isinstance(target, bool):
        return value.strip().lower() in ("1", "true", "yes", "on")
    if isinstance(target, int):
        return int(value, 0)
    if isinstance(target, float) or target is None:
        return float(value)
    return value.strip()


def _build(cls, values: Mapping[str, str], section: str):
    defaults = cls()
    known = {f.name for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, raw in values.items():
        if key not in known:
            raise ConfigError(f"[{section}] unknown key {key!r}")
        try:
            kwargs[key] = _coerce(raw, getattr(defaults, key))
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key}: {exc}") from None
    try:
        return cls(**kwargs)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"[{section}] {exc}") from None


def parse_anchors(text: str) -> list[tuple[int, float]]:
    anchors = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        try:
            s, frac = item.split(":")
            anchors.append((int(s), float(frac)))
        except ValueError:
            raise ConfigError(f"bad energy anchor {item!r}; expected s:fraction") from None
    return anchors


def _energy(values: Mapping[str, str]) -> EnergyModel:
    explicit = {"e_fixed", "e_bit_read", "e_bit_cmp", "e_step2_way"}
    keys = set(values)
    if keys & explicit:
        unknown = keys - explicit
        if unknown:
            raise ConfigError(f"[energy] cannot mix explicit coefficients with {sorted(unknown)}")
        try:
            return EnergyModel(**{k: float(v) for k, v in values.items()})
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"[energy] {exc}") from None
    unknown = keys - {"anchors", "baseline_joules", "compare_share"}
    if unknown:
        raise ConfigError(f"[energy] unknown keys {sorted(unknown)}")
    anchors = parse_anchors(values["anchors"]) if "anchors" in values else list(REFERENCE_ANCHORS)
    # CalibrationError propagates; the CLI maps it to its own exit status
    return calibrate_energy(
        anchors,
        baseline_joules=float(values.get("baseline_joules", BASELINE_ENERGY_J)),
        compare_share=float(values.get("compare_share", 0.5)),
    )


def _scheme(values: Mapping[str, str]) -> SchemeConfig:
    values = dict(values)
    if "scheme" in values:
        values["kind"] = values.pop("scheme")
    return _build(SchemeConfig, values, "scheme")


def _trace(values: Mapping[str, str], base: Path) -> Union[Path, SyntheticSpec, None]:
    if not values:
        return None
    if "path" in values:
        if len(values) > 1:
            raise ConfigError("[trace] path excludes synthetic generator keys")
        path = Path(values["path"])
        return path if path.is_absolute() else base / path
    return _build(SyntheticSpec, values, "trace")


def load_config(path: Optional[Union[str, Path]] = None) -> ExperimentConfig:
    """Read an INI experiment file; ``None`` gives the defaults."""
    if path is None:
        return ExperimentConfig()
    path = Path(path)
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    known = {"geometry", "scheme", "technology", "energy", "trace", "run"}
    extra = set(parser.sections()) - known
    if extra:
        raise ConfigError(f"unknown config sections {sorted(extra)}")

    def section(name: str) -> dict[str, str]:
        return dict(parser[name]) if parser.has_section(name) else {}

    config = ExperimentConfig(
        geometry=_build(CacheGeometry, section("geometry"), "geometry"),
        scheme=_scheme(section("scheme")),
        technology=_build(TechnologyParams, section("technology"), "technology"),
        energy=_energy(section("energy")),
        trace=_trace(section("trace"), path.parent),
    )
    run = section("run")
    unknown = set(run) - {"access_period_s", "warmup", "out", "jobs", "engine"}
    if unknown:
        raise ConfigError(f"[run] unknown keys {sorted(unknown)}")
    try:
        config.access_period_s = float(run.get("access_period_s", config.access_period_s))
        config.warmup = int(run.get("warmup", config.warmup))
        config.jobs = int(run.get("jobs", config.jobs))
    except ValueError as exc:
        raise ConfigError(f"[run] {exc}") from None
    config.engine = run.get("engine", config.engine)
    if "out" in run:
        out = Path(run["out"])
        config.out_dir = out if out.is_absolute() else path.parent / out
    validate(config)
    return config


def validate(config: ExperimentConfig) -> None:
    if config.access_period_s <= 0:
        raise ConfigError("access_period_s must be positive")
    if config.warmup < 0 or config.jobs < 1:
        raise ConfigError("warmup must be >= 0 and jobs >= 1")
    if config.engine not in ("auto", "python", "compiled"):
        raise ConfigError(f"unknown engine {config.engine!r}")
    scheme = config.scheme
    if scheme.kind == "3rset" and not 1 <= scheme.split_bits < config.geometry.tag_bits:
        raise ConfigError(f"split_bits must lie in [1, {config.geometry.tag_bits - 1}]")
    if isinstance(config.trace, SyntheticSpec):
        if config.trace.address_bits != config.geometry.address_bits:
            raise ConfigError("[trace] address_bits differs from [geometry] address_bits")
