"""Read-disturbance, MTTF and energy simulation of STT-MRAM cache tag arrays."""
from .cache import CacheGeometry, GapRecorder, TagCache, TagWayState, compose, decompose
from .energy import EnergyModel, calibrate_energy, energy_per_access
from .metrics import FailureSummary, RunMetrics, mttf, per_cell_failure_probability
from .reliability import (
    TechnologyParams,
    p_failure_after_n_reads,
    p_read_disturbance,
    p_retention_failure,
    p_write_failure,
    thermal_stability,
)
from .schemes import AccessOutcome, SchemeConfig
from .simulator import compare_schemes, simulate, sweep_split
from .workload import SyntheticSpec, TraceRecord, generate, parse_trace

__version__ = "0.1.0"
