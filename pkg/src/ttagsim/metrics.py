"""Aggregation of access outcomes into reliability and energy figures."""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field, fields
from typing import Iterable, Mapping, NamedTuple, Optional

from .energy import EnergyModel
from .reliability import p_failure_after_n_reads
from .schemes import AccessOutcome

_COUNTER_FIELDS = (
    "total_accesses", "hits", "misses", "reads", "writes",
    "bits_read_total", "bits_read_step1", "bits_read_step2",
    "bits_read_hit", "bits_read_miss", "bits_compared",
    "partial_matches_hit", "partial_matches_miss",
    "predictions_correct", "valid_ways_sum",
)
_HISTOGRAM_FIELDS = ("tag_gaps", "data_gaps", "censored_tag_gaps", "censored_data_gaps")


@dataclass
class RunMetrics:
    """Streaming aggregate of one simulation run."""

    scheme: str = "baseline"
    split_bits: Optional[int] = None
    p_bit: float = 1e-8
    access_period_s: float = 1e-9
    energy_model: Optional[EnergyModel] = None

    total_accesses: int = 0
    hits: int = 0
    misses: int = 0
    reads: int = 0
    writes: int = 0
    bits_read_total: int = 0
    bits_read_step1: int = 0
    bits_read_step2: int = 0
    bits_read_hit: int = 0
    bits_read_miss: int = 0
    bits_compared: int = 0
    partial_matches_hit: int = 0
    partial_matches_miss: int = 0
    predictions_correct: int = 0
    valid_ways_sum: int = 0

    tag_gaps: Counter = field(default_factory=Counter)
    data_gaps: Counter = field(default_factory=Counter)
    censored_tag_gaps: Counter = field(default_factory=Counter)
    censored_data_gaps: Counter = field(default_factory=Counter)

    def record(self, outcome: AccessOutcome, is_write: bool = False) -> None:
        hit, _, s, predicted_correct, step1, step2, compared, valid = outcome
        bits = step1 + step2
        self.total_accesses += 1
        if is_write:
            self.writes += 1
        else:
            self.reads += 1
        self.bits_read_total += bits
        self.bits_read_step1 += step1
        self.bits_read_step2 += step2
        self.bits_compared += compared
        self.valid_ways_sum += valid
        if hit:
            self.hits += 1
            self.bits_read_hit += bits
            self.partial_matches_hit += s
        else:
            self.misses += 1
            self.bits_read_miss += bits
            self.partial_matches_miss += s
        if predicted_correct:
            self.predictions_correct += 1

    def merge(self, other: "RunMetrics") -> "RunMetrics":
        """Combine two runs of the same configuration into a new aggregate."""
        for name in ("scheme", "split_bits", "p_bit", "access_period_s", "energy_model"):
            if getattr(self, name) != getattr(other, name):
                raise ValueError(f"cannot merge runs that differ in {name}")
        merged = RunMetrics(
            self.scheme, self.split_bits, self.p_bit, self.access_period_s, self.energy_model
        )
        for name in _COUNTER_FIELDS:
            setattr(merged, name, getattr(self, name) + getattr(other, name))
        for name in _HISTOGRAM_FIELDS:
            setattr(merged, name, getattr(self, name) + getattr(other, name))
        return merged

    @property
    def hit_rate(self) -> float:
        return self.hits / self.total_accesses if self.total_accesses else 0.0

    @property
    def bits_per_access(self) -> float:
        return self.bits_read_total / self.total_accesses if self.total_accesses else 0.0

    @property
    def mean_valid_ways(self) -> float:
        return self.valid_ways_sum / self.total_accesses if self.total_accesses else 0.0

    @property
    def avg_partial_matches_hit(self) -> float:
        return self.partial_matches_hit / self.hits if self.hits else 0.0

    @property
    def avg_partial_matches_miss(self) -> float:
        return self.partial_matches_miss / self.misses if self.misses else 0.0

    @property
    def prediction_accuracy(self) -> float:
        return self.predictions_correct / self.total_accesses if self.total_accesses else 0.0

    @property
    def expected_disturb_events(self) -> float:
        return self.p_bit * self.bits_read_total

    @property
    def simulated_time_s(self) -> float:
        return self.total_accesses * self.access_period_s

    @property
    def mttf_seconds(self) -> float:
        if self.total_accesses == 0:
            return math.inf
        return mttf(self.bits_read_total, self.simulated_time_s, self.p_bit)

    @property
    def energy_joules(self) -> float:
        model = self.energy_model or EnergyModel.default()
        return model.total(
            self.total_accesses, self.bits_read_total, self.bits_compared,
            self.partial_matches_hit + self.partial_matches_miss,
        )

    @property
    def energy_per_access_j(self) -> float:
        return self.energy_joules / self.total_accesses if self.total_accesses else 0.0

    def tag_failure(self) -> "FailureSummary":
        return per_cell_failure_probability(self.tag_gaps, self.p_bit)

    def data_failure(self) -> "FailureSummary":
        return per_cell_failure_probability(self.data_gaps, self.p_bit)

    def scalars(self) -> dict[str, object]:
        """Flat row of every scalar field and derived quantity, for CSV export."""
        row: dict[str, object] = {
            "scheme": self.scheme,
            "split_bits": "" if self.split_bits is None else self.split_bits,
        }
        for name in _COUNTER_FIELDS:
            row[name] = getattr(self, name)
        tag, data = self.tag_failure(), self.data_failure()
        row.update(
            hit_rate=self.hit_rate,
            bits_per_access=self.bits_per_access,
            mean_valid_ways=self.mean_valid_ways,
            avg_partial_matches_hit=self.avg_partial_matches_hit,
            avg_partial_matches_miss=self.avg_partial_matches_miss,
            prediction_accuracy=self.prediction_accuracy,
            p_bit=self.p_bit,
            access_period_s=self.access_period_s,
            expected_disturb_events=self.expected_disturb_events,
            simulated_time_s=self.simulated_time_s,
            mttf_seconds=self.mttf_seconds,
            energy_joules=self.energy_joules,
            energy_per_access_j=self.energy_per_access_j,
            tag_gap_max=max(self.tag_gaps, default=0),
            data_gap_max=max(self.data_gaps, default=0),
            tag_gaps_closed=sum(self.tag_gaps.values()),
            data_gaps_closed=sum(self.data_gaps.values()),
            tag_gaps_censored=sum(self.censored_tag_gaps.values()),
            data_gaps_censored=sum(self.censored_data_gaps.values()),
            tag_p_any=tag.p_any,
            tag_p_mean_gap=tag.p_mean_gap,
            tag_p_worst_gap=tag.p_worst_gap,
            data_p_any=data.p_any,
            data_p_mean_gap=data.p_mean_gap,
            data_p_worst_gap=data.p_worst_gap,
        )
        return row


class FailureSummary(NamedTuple):
    expected_events: float  # p * total reads across all gaps
    p_any: float  # probability of at least one disturbance over all gaps
    p_mean_gap: float  # count-weighted mean of the per-gap failure probability
    p_worst_gap: float  # failure probability over the longest gap


def per_cell_failure_probability(gap_histogram: Mapping[int, int], p_single: float) -> FailureSummary:
    """Apply n-read accumulation to every gap of a histogram and compose."""
    if not 0.0 <= p_single <= 1.0:
        raise ValueError("p_single must lie in [0, 1]")
    total_reads = sum(g * c for g, c in gap_histogram.items())
    gaps = sum(gap_histogram.values())
    if gaps == 0:
        return FailureSummary(0.0, 0.0, 0.0, 0.0)
    expected = p_single * total_reads
    p_any = p_failure_after_n_reads(p_single, total_reads)
    mean_gap = sum(c * p_failure_after_n_reads(p_single, g) for g, c in gap_histogram.items()) / gaps
    worst = p_failure_after_n_reads(p_single, max(gap_histogram))
    return FailureSummary(expected, p_any, mean_gap, worst)


def mttf(bits_read_total: int, simulated_time_s: float, p_bit: float) -> float:
    """Mean time to the first read-disturbance event, in seconds."""
    if simulated_time_s <= 0:
        raise ValueError("simulated time must be positive")
    rate = p_bit * bits_read_total
    if rate == 0:
        return math.inf
    return simulated_time_s / rate


def ratio_of_sums(numerators: Iterable[float], denominators: Iterable[float]) -> float:
    """Global ratio over workloads: sum(a) / sum(b)."""
    return sum(numerators) / sum(denominators)


def mean_of_ratios(numerators: Iterable[float], denominators: Iterable[float]) -> float:
    """Per-workload ratios averaged arithmetically."""
    ratios = [a / b for a, b in zip(numerators, denominators, strict=True)]
    return sum(ratios) / len(ratios)
