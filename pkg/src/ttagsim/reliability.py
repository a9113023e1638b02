"""STT-MRAM cell error probabilities.

Closed-form models for the three error mechanisms of a magnetic tunnel
junction (read disturbance, write failure, retention failure) plus the
accumulation of read-disturbance probability over repeated reads.

Every ``1 - exp(-x)`` and ``1 - (1 - p)**n`` is evaluated through
``expm1``/``log1p`` so probabilities around 1e-8 keep full precision.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

# CODATA 2018 exact / recommended values, SI units.
BOLTZMANN = 1.380649e-23  # J/K
ELECTRON_CHARGE = 1.602176634e-19  # C
BOHR_MAGNETON = 9.2740100783e-24  # J/T
EULER_GAMMA = 0.5772156649015329


class DomainError(ValueError):
    """An input lies outside the validity range of a formula."""


def _check_finite(**values: float) -> None:
    for name, value in values.items():
        if value is None:
            continue
        if math.isnan(value):
            raise DomainError(f"{name} is NaN")


@dataclass(frozen=True)
class TechnologyParams:
    """Physical and circuit constants of one STT-MRAM cell.

    ``delta`` may be omitted when both ``e_b`` and ``temperature`` are given;
    it is then derived as ``e_b / (k_B * temperature)``.

    The defaults describe a 60-Delta cell read at 0.7 of its critical
    current, which puts the per-read disturbance probability near 1.5e-8.
    The simulator pipeline uses ``p_bit_read_disturb`` directly rather
    than the value derived from the read-disturbance formula.
    """

    tau: float = 1e-9
    i_read: float = 70e-6
    i_c0: float = 100e-6
    t_read: float = 1e-9
    i_write: float = 150e-6
    t_write: float = 10e-9
    delta: Optional[float] = 60.0
    e_b: Optional[float] = None
    temperature: Optional[float] = None
    spin_polarization: float = 0.6
    magnetic_momentum: float = 5e-19
    p_bit_read_disturb: float = 1e-8

    def __post_init__(self) -> None:
        _check_finite(
            tau=self.tau, i_read=self.i_read, i_c0=self.i_c0, t_read=self.t_read,
            i_write=self.i_write, t_write=self.t_write, delta=self.delta,
            e_b=self.e_b, temperature=self.temperature,
            spin_polarization=self.spin_polarization,
            magnetic_momentum=self.magnetic_momentum,
            p_bit_read_disturb=self.p_bit_read_disturb,
        )
        if self.e_b is not None and self.temperature is not None:
            derived = thermal_stability(self.e_b, self.temperature)
            if self.delta is None:
                object.__setattr__(self, "delta", derived)
            elif not math.isclose(self.delta, derived, rel_tol=1e-12):
                raise DomainError(
                    f"delta={self.delta} disagrees with e_b/(k_B*T)={derived}"
                )
        if self.delta is None:
            raise DomainError("delta missing and not derivable from e_b and temperature")
        if self.tau <= 0 or self.i_c0 <= 0 or self.delta <= 0:
            raise DomainError("tau, i_c0 and delta must be positive")
        if self.t_read < 0 or self.t_write < 0 or self.i_read < 0:
            raise DomainError("t_read, t_write and i_read must be non-negative")
        if not 0.0 < self.spin_polarization < 1.0:
            raise DomainError("spin_polarization must lie in (0, 1)")
        if not 0.0 <= self.p_bit_read_disturb <= 1.0:
            raise DomainError("p_bit_read_disturb must lie in [0, 1]")


def thermal_stability(e_b: float, temperature: float) -> float:
    """Thermal stability factor ``E_b / (k_B T)``."""
    _check_finite(e_b=e_b, temperature=temperature)
    if e_b <= 0 or temperature <= 0:
        raise DomainError("barrier energy and temperature must be positive")
    return e_b / (BOLTZMANN * temperature)


def p_read_disturbance(params: TechnologyParams) -> float:
    """Probability that one read pulse flips the cell.

    ``1 - exp(-t_read / (tau * exp(delta * (1 - i_read / i_c0))))``
    """
    if params.t_read == 0:
        return 0.0
    ratio = params.i_read / params.i_c0
    if ratio >= 1.0:
        warnings.warn(
            "i_read >= i_c0: read current switches the cell, "
            "outside the thermally activated disturbance regime",
            RuntimeWarning,
            stacklevel=2,
        )
    # log of the exponent argument; keeps exp() from overflowing at large delta
    log_rate = math.log(params.t_read / params.tau) - params.delta * (1.0 - ratio)
    if log_rate > 709.0:
        return 1.0
    return -math.expm1(-math.exp(log_rate))


def _write_switching_exponent(params: TechnologyParams, moment_on_log_term_only: bool) -> float:
    p = params.spin_polarization
    numerator = 2.0 * BOHR_MAGNETON * p * (params.i_write - params.i_c0)
    log_term = math.log(math.pi ** 2 * params.delta / 4.0)
    moment_term = ELECTRON_CHARGE * params.magnetic_momentum * (1.0 + p ** 2)
    if moment_on_log_term_only:
        denominator = EULER_GAMMA + log_term * moment_term
    else:
        denominator = (EULER_GAMMA + log_term) * moment_term
    return params.t_write * numerator / denominator


def p_write_failure(params: TechnologyParams, moment_on_log_term_only: bool = False) -> float:
    """Probability that a write pulse of ``t_write`` fails to switch the cell.

    The default groups the denominator as ``(c + ln(pi^2 delta / 4)) * e m (1 + p^2)``,
    which makes the switching time come out in seconds. ``moment_on_log_term_only=True``
    binds only the log term to the moment factor.
    """
    if params.i_write <= params.i_c0:
        raise DomainError("write current must exceed the critical current i_c0")
    return math.exp(-_write_switching_exponent(params, moment_on_log_term_only))


def p_retention_failure(idle_time: float, delta: float) -> float:
    """Probability of a thermal flip during ``idle_time`` seconds of idleness."""
    _check_finite(idle_time=idle_time, delta=delta)
    if idle_time < 0:
        raise DomainError("idle_time must be non-negative")
    if delta < 0:
        raise DomainError("delta must be non-negative")
    return -math.expm1(-idle_time * math.exp(-delta))


def p_failure_after_n_reads(p_single: float, n: float) -> float:
    """Probability of at least one disturbance over ``n`` independent reads.

    Evaluated as ``-expm1(n * log1p(-p_single))``.
    """
    _check_finite(p_single=p_single, n=n)
    if not 0.0 <= p_single <= 1.0:
        raise DomainError("p_single must lie in [0, 1]")
    if n < 0:
        raise DomainError("n must be non-negative")
    if n == 0 or p_single == 0.0:
        return 0.0
    if p_single == 1.0:
        return 1.0
    return -math.expm1(n * math.log1p(-p_single))
