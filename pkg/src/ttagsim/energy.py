"""Affine per-access energy model for the tag array, calibrated on scenario anchors.

Energy of one access::

    e_fixed + e_bit_read * bits_read + e_bit_cmp * bits_compared
            + e_step2_way * (ways enabled in the second 3RSeT step)

The last term carries the per-way cost of the two-step control path; it is
zero for the baseline and way prediction. Since every scheme compares exactly
the bits it reads, anchors only pin ``e_bit_read + e_bit_cmp``; the split
between the two is a fixed share chosen at calibration.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .schemes import AccessOutcome

BASELINE_ENERGY_J = 1.0e-11
# (partial matches s, energy as a fraction of the baseline access) for an
# 8-way, 31-bit tag, 4-bit split 3RSeT access with every way valid
REFERENCE_ANCHORS: tuple[tuple[int, float], ...] = ((0, 0.199), (1, 0.328), (2, 0.454))
ANCHOR_TOLERANCE = 0.02


class CalibrationError(ValueError):
    pass


@dataclass(frozen=True)
class EnergyModel:
    e_fixed: float
    e_bit_read: float
    e_bit_cmp: float
    e_step2_way: float = 0.0

    def __post_init__(self) -> None:
        if min(self.e_fixed, self.e_bit_read, self.e_bit_cmp, self.e_step2_way) < 0:
            raise CalibrationError(f"negative energy coefficient in {self}")

    @classmethod
    def default(cls) -> "EnergyModel":
        return calibrate_energy(REFERENCE_ANCHORS)

    def total(self, accesses: int, bits_read: int, bits_compared: int, step2_ways: int) -> float:
        return (
            self.e_fixed * accesses
            + self.e_bit_read * bits_read
            + self.e_bit_cmp * bits_compared
            + self.e_step2_way * step2_ways
        )


def energy_per_access(outcome: AccessOutcome, model: EnergyModel) -> float:
    return model.total(1, outcome.bits_read, outcome.bits_compared, outcome.partial_match_count)


def scenario_energy(model: EnergyModel, s: int, tag_bits: int = 31, split_bits: int = 4,
                    associativity: int = 8) -> float:
    """Energy of a 3RSeT access on a full set with ``s`` partial matches."""
    bits = associativity * split_bits + s * (tag_bits - split_bits)
    return model.total(1, bits, bits, s)


def baseline_energy(model: EnergyModel, tag_bits: int = 31, associativity: int = 8) -> float:
    bits = associativity * tag_bits
    return model.total(1, bits, bits, 0)


def calibrate_energy(
    anchors: Sequence[tuple[int, float]],
    baseline_joules: float = BASELINE_ENERGY_J,
    tag_bits: int = 31,
    split_bits: int = 4,
    associativity: int = 8,
    compare_share: float = 0.5,
    tolerance: float = ANCHOR_TOLERANCE,
) -> EnergyModel:
    """Fit an ``EnergyModel`` to 3RSeT scenario anchors.

    ``anchors`` holds ``(s, fraction_of_baseline)`` pairs. The full-set baseline
    access is pinned to ``baseline_joules`` exactly; the remaining two degrees of
    freedom (per-bit cost, per-second-step-way cost) are fit by least squares.
    Raises ``CalibrationError`` when fewer than two distinct scenarios are
    given, when a coefficient comes out negative, or when any anchor residual
    exceeds ``tolerance`` (fraction of baseline).
    """
    if baseline_joules <= 0:
        raise CalibrationError("baseline energy must be positive")
    if not 0.0 <= compare_share <= 1.0:
        raise CalibrationError("compare_share must lie in [0, 1]")
    anchors = [(int(s), float(frac)) for s, frac in anchors]
    if any(not 0 <= s <= associativity for s, _ in anchors):
        raise CalibrationError(f"scenario s must lie in [0, {associativity}]")

    k, n, m = associativity, tag_bits, split_bits
    # work in units of the baseline energy, with e_fixed eliminated through
    # e_fixed = 1 - k*n*b
    a = np.array([[k * m + s * (n - m) - k * n, s] for s, _ in anchors], dtype=float)
    y = np.array([frac - 1.0 for _, frac in anchors], dtype=float)
    if len(anchors) < 2 or np.linalg.matrix_rank(a) < 2:
        raise CalibrationError(
            "need the baseline plus at least two distinct scenario anchors"
        )
    (b, g), *_ = np.linalg.lstsq(a, y, rcond=None)
    f = 1.0 - k * n * b
    residuals = a @ np.array([b, g]) - y
    worst = float(np.max(np.abs(residuals)))
    if worst > tolerance:
        raise CalibrationError(
            f"affine model misses an anchor by {worst:.4f} of baseline (limit {tolerance})"
        )
    try:
        return EnergyModel(
            e_fixed=float(f) * baseline_joules,
            e_bit_read=float(b) * (1.0 - compare_share) * baseline_joules,
            e_bit_cmp=float(b) * compare_share * baseline_joules,
            e_step2_way=float(g) * baseline_joules,
        )
    except CalibrationError as exc:
        raise CalibrationError(f"anchors imply a negative coefficient: {exc}") from None
