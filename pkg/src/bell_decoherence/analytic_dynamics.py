"""Closed-form relaxation of single polarizations and of the two-spin singlet.

Correlation times may be ``math.inf`` (``NO_NOISE``), in which case the
corresponding decay factor is exactly 1.

The longitudinal (sigma_z sigma_z) decay of the singlet follows the Bloch
equations, ``exp(-t/2 tau1_1 - t/2 tau1_2)``; a caller wanting the
alternative ``tau0`` reading can swap ``tau0``/``tau1`` or use
:func:`decay_factors` directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .spin_algebra import (
    AXES,
    IDENTITY4,
    DensityMatrix4,
    as_direction,
    as_polarization,
    pauli,
    tensor,
)

NO_NOISE = math.inf


def _rate(tau: float) -> float:
    return 0.0 if math.isinf(tau) else 1.0 / tau


def _check_time(t: float) -> float:
    t = float(t)
    if not t >= 0.0:
        raise ValueError(f"time must be non-negative, got {t!r}")
    return t


@dataclass(frozen=True)
class RelaxationTimes:
    """Field correlation times: ``tau0`` along the flight (z) axis, ``tau1`` transverse."""

    tau0: float
    tau1: float

    def __post_init__(self):
        for name in ("tau0", "tau1"):
            val = getattr(self, name)
            if not val > 0:
                raise ValueError(f"{name} must be > 0, got {val!r}")

    @classmethod
    def equal(cls, tau: float) -> "RelaxationTimes":
        return cls(tau, tau)

    @property
    def longitudinal_rate(self) -> float:
        """Decay rate of <P_z>: 1/(2 tau1)."""
        return 0.5 * _rate(self.tau1)

    @property
    def transverse_rate(self) -> float:
        """Decay rate of <P_x>, <P_y>: 1/(4 tau1) + 1/(4 tau0)."""
        return 0.25 * (_rate(self.tau1) + _rate(self.tau0))


@dataclass(frozen=True)
class SpinDecayParams:
    particle1: RelaxationTimes
    particle2: RelaxationTimes

    @classmethod
    def equal(cls, tau_s: float) -> "SpinDecayParams":
        """All four correlation times equal to ``tau_s``."""
        return cls(RelaxationTimes.equal(tau_s), RelaxationTimes.equal(tau_s))

    @property
    def max_finite_tau(self) -> float | None:
        taus = [
            tau
            for p in (self.particle1, self.particle2)
            for tau in (p.tau0, p.tau1)
            if not math.isinf(tau)
        ]
        return max(taus) if taus else None


def axis_rates(tau_xx: float, tau_yy: float, tau_zz: float) -> np.ndarray:
    """Per-axis decay rates of <P> for white-noise fields with the given correlation times.

    Rotational diffusion about axis a at rate 1/(4 tau_aa) damps the two
    components perpendicular to it, so with tau_xx = tau_yy = tau1 and
    tau_zz = tau0 this gives the Bloch rates of :class:`RelaxationTimes`.
    """
    dx, dy, dz = (0.25 * _rate(tau) for tau in (tau_xx, tau_yy, tau_zz))
    return np.array([dy + dz, dx + dz, dx + dy])


def evolve_polarization(p0, times: RelaxationTimes, t: float) -> np.ndarray:
    t = _check_time(t)
    p0 = as_polarization(p0)
    factors = np.array(
        [
            math.exp(-t * times.transverse_rate),
            math.exp(-t * times.transverse_rate),
            math.exp(-t * times.longitudinal_rate),
        ]
    )
    return p0 * factors


def decay_factors(params: SpinDecayParams, t: float) -> tuple[float, float]:
    """(transverse, longitudinal) decay factors multiplying the xx/yy and zz terms."""
    t = _check_time(t)
    p1, p2 = params.particle1, params.particle2
    transverse = math.exp(-t * (p1.transverse_rate + p2.transverse_rate))
    longitudinal = math.exp(-t * (p1.longitudinal_rate + p2.longitudinal_rate))
    return transverse, longitudinal


def singlet_rho_t(params: SpinDecayParams, t: float) -> DensityMatrix4:
    transverse, longitudinal = decay_factors(params, t)
    coeffs = {"x": transverse, "y": transverse, "z": longitudinal}
    mat = IDENTITY4.copy()
    for ax in AXES:
        mat = mat - coeffs[ax] * tensor(pauli(ax), pauli(ax))
    return DensityMatrix4(0.25 * mat)


def correlation(params: SpinDecayParams, n1, n2, t: float) -> float:
    """<sigma_1.n1 sigma_2.n2> in the decayed singlet."""
    n1, n2 = as_direction(n1), as_direction(n2)
    transverse, longitudinal = decay_factors(params, t)
    return -(n1[0] * n2[0] + n1[1] * n2[1]) * transverse - n1[2] * n2[2] * longitudinal
