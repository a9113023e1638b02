import numpy as np
import pytest
from hypothesis import given, strategies as st

from ttagsim.energy import (
    BASELINE_ENERGY_J, REFERENCE_ANCHORS, CalibrationError, EnergyModel,
    baseline_energy, calibrate_energy, energy_per_access, scenario_energy,
)
from ttagsim.schemes import AccessOutcome

MODEL = EnergyModel.default()


def _weighted_fit(anchors, k=8, n=31, m=4):
    """Independent fit in (f, b, g) with the baseline row weighted to dominate."""
    rows = [[1.0, k * m + s * (n - m), s] for s, _ in anchors]
    ys = [frac for _, frac in anchors]
    w = 1e7
    rows.append([w, w * k * n, 0.0])
    ys.append(w)
    sol, *_ = np.linalg.lstsq(np.array(rows), np.array(ys), rcond=None)
    return sol


def test_anchors_within_two_percent():
    for s, frac in REFERENCE_ANCHORS:
        got = scenario_energy(MODEL, s) / BASELINE_ENERGY_J
        assert abs(got - frac) <= 0.02


def test_baseline_is_exact():
    assert baseline_energy(MODEL) == pytest.approx(BASELINE_ENERGY_J, rel=1e-12)


def test_matches_weighted_least_squares():
    f, b, g = _weighted_fit(REFERENCE_ANCHORS)
    assert MODEL.e_fixed / BASELINE_ENERGY_J == pytest.approx(f, rel=1e-5)
    assert (MODEL.e_bit_read + MODEL.e_bit_cmp) / BASELINE_ENERGY_J == pytest.approx(b, rel=1e-5)
    assert MODEL.e_step2_way / BASELINE_ENERGY_J == pytest.approx(g, rel=1e-5)


def test_worst_case_scenario_exceeds_baseline():
    # seven partial matches cost more than reading every tag in full
    s7 = scenario_energy(MODEL, 7) / BASELINE_ENERGY_J
    assert 1.0 < s7 < 1.2


def test_slope_per_partial_match():
    slope = (scenario_energy(MODEL, 2) - scenario_energy(MODEL, 0)) / 2 / BASELINE_ENERGY_J
    assert slope == pytest.approx((0.454 - 0.199) / 2, abs=0.005)


def test_single_anchor_raises():
    with pytest.raises(CalibrationError):
        calibrate_energy([(1, 0.3)])
    with pytest.raises(CalibrationError):
        calibrate_energy([(1, 0.3), (1, 0.31)])


def test_exact_anchors_zero_residual():
    truth = EnergyModel(e_fixed=1e-12, e_bit_read=1e-14, e_bit_cmp=1e-14, e_step2_way=5e-13)
    base = baseline_energy(truth)
    anchors = [(s, scenario_energy(truth, s) / base) for s in (0, 1, 2, 5)]
    fit = calibrate_energy(anchors, baseline_joules=base, tolerance=1e-12)
    for s in range(9):
        assert scenario_energy(fit, s) == pytest.approx(scenario_energy(truth, s), rel=1e-9)


def test_inconsistent_anchors_rejected():
    with pytest.raises(CalibrationError):
        calibrate_energy([(0, 0.2), (1, 0.9), (2, 0.3)])


def test_negative_coefficient_rejected():
    with pytest.raises(CalibrationError):
        EnergyModel(-1.0, 0.0, 0.0)
    # energy falling with s forces a negative per-way cost
    with pytest.raises(CalibrationError):
        calibrate_energy([(0, 0.5), (4, 0.4)], tolerance=1.0)


def test_bad_inputs():
    with pytest.raises(CalibrationError):
        calibrate_energy(REFERENCE_ANCHORS, baseline_joules=0)
    with pytest.raises(CalibrationError):
        calibrate_energy(REFERENCE_ANCHORS, compare_share=1.5)
    with pytest.raises(CalibrationError):
        calibrate_energy([(0, 0.2), (9, 1.0)])


@given(st.integers(0, 7))
def test_monotone_in_partial_matches(s):
    assert scenario_energy(MODEL, s + 1) > scenario_energy(MODEL, s)


def test_zero_bit_access_costs_fixed_part():
    out = AccessOutcome(False, -1, 0, False, 0, 0, 0, 0)
    assert energy_per_access(out, MODEL) == MODEL.e_fixed


def test_compare_share_only_moves_split():
    a = calibrate_energy(REFERENCE_ANCHORS, compare_share=0.0)
    b = calibrate_energy(REFERENCE_ANCHORS, compare_share=1.0)
    assert a.e_bit_cmp == 0 and b.e_bit_read == 0
    for s in range(9):
        assert scenario_energy(a, s) == pytest.approx(scenario_energy(b, s), rel=1e-12)
