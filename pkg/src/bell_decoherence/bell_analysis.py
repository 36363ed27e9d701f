"""Bell inequality |E(a,b) - E(a,c)| <= 1 + E(b,c) for the decaying singlet."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .analytic_dynamics import SpinDecayParams, correlation
from .spatial_decoherence import SpatialParams, asymptotic_separation, separation
from .spin_algebra import as_direction

VIOLATION_TOL = 1e-12
MAX_DOUBLINGS = 50


@dataclass(frozen=True, eq=False)
class BellAngles:
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        for name in ("a", "b", "c"):
            object.__setattr__(self, name, as_direction(getattr(self, name)))

    @classmethod
    def coplanar(cls, theta_ab: float, theta_bc: float) -> "BellAngles":
        """Directions in the x-z plane: a along z, b rotated by theta_ab, c by a further theta_bc."""
        return cls(
            a=plane_direction(0.0),
            b=plane_direction(theta_ab),
            c=plane_direction(theta_ab + theta_bc),
        )

    @classmethod
    def canonical(cls) -> "BellAngles":
        """theta(a,b) = theta(b,c) = pi/3, theta(a,c) = 2 pi/3."""
        return cls.coplanar(math.pi / 3, math.pi / 3)


def plane_direction(theta: float) -> np.ndarray:
    return np.array([math.sin(theta), 0.0, math.cos(theta)])


@dataclass(frozen=True)
class BellEvaluation:
    lhs: float
    rhs: float
    violated: bool
    t: float
    e_ab: float = math.nan
    e_ac: float = math.nan
    e_bc: float = math.nan


def evaluate_bell(params: SpinDecayParams, angles: BellAngles, t: float) -> BellEvaluation:
    if not t >= 0:
        raise ValueError(f"time must be non-negative, got {t!r}")
    e_ab = correlation(params, angles.a, angles.b, t)
    e_ac = correlation(params, angles.a, angles.c, t)
    e_bc = correlation(params, angles.b, angles.c, t)
    e_ab, e_ac, e_bc = float(e_ab), float(e_ac), float(e_bc)
    lhs = abs(e_ab - e_ac)
    rhs = 1.0 + e_bc
    return BellEvaluation(lhs, rhs, bool(lhs > rhs + VIOLATION_TOL), float(t), e_ab, e_ac, e_bc)


def _violated(params, angles, t) -> bool:
    return evaluate_bell(params, angles, t).violated


def crossover_time(params: SpinDecayParams, angles: BellAngles, rtol: float = 1e-9) -> float | None:
    """First time the inequality stops being violated, or ``None``.

    ``None`` when there is no violation at t = 0, or when none of 50 doublings
    of the search window (starting from the longest finite correlation time)
    reaches a non-violated time.
    """
    if not _violated(params, angles, 0.0):
        return None
    hi = params.max_finite_tau or 1.0
    for _ in range(MAX_DOUBLINGS):
        if not _violated(params, angles, hi):
            break
        hi *= 2.0
    else:
        return None
    lo = 0.0
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if _violated(params, angles, mid):
            lo = mid
        else:
            hi = mid
    return hi


@dataclass(frozen=True)
class CrossoverSeparation:
    t_star: float
    exact: float
    asymptotic: float


def crossover_separation(
    spin: SpinDecayParams, space: SpatialParams, angles: BellAngles
) -> CrossoverSeparation | None:
    """Detector separation at the crossover: exact centre formula and its long-time asymptote."""
    t_star = crossover_time(spin, angles)
    if t_star is None:
        return None
    return CrossoverSeparation(t_star, separation(space, t_star), asymptotic_separation(space, t_star))


def sweep(params: SpinDecayParams, angles: BellAngles, t_grid) -> list[BellEvaluation]:
    ts = np.asarray(t_grid, dtype=float).ravel()
    if ts.size and (np.any(ts < 0) or np.any(np.diff(ts) < 0)):
        raise ValueError("time grid must be sorted and non-negative")
    return [evaluate_bell(params, angles, float(t)) for t in ts]
