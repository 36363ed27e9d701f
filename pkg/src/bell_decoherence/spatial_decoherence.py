"""Positional channel of each separating wavepacket.

Each particle's reduced spatial density matrix ``rho(x, y, t)`` obeys the
high-temperature Caldeira-Leggett master equation with a constant force
``+epsilon`` on particle 1 and ``-epsilon`` on particle 2::

    d rho/dt = (i hbar / 2m)(d_x^2 - d_y^2) rho
               - (gamma / 2)(x - y)(d_x - d_y) rho
               - (D / 4 hbar^2)(x - y)^2 rho
               + i s (epsilon / hbar)(x - y) rho,        s = +1 / -1

``gamma`` is the momentum relaxation rate (``d<p>/dt = s epsilon - gamma <p>``)
and ``D`` the momentum diffusion coefficient (``d<p^2>/dt`` gains ``D/2``).
``D`` is a free input; the usual high-temperature identification is
``D = 4 m gamma k_B T`` in these conventions.

The initial state is the pure Gaussian ``phi(x) = (pi d^2)^(-1/4) exp(-x^2 / 2 d^2)``.
In centre/offset coordinates ``R = (x + y)/2``, ``r = x - y`` the exact
solution (derived by characteristics in the Fourier variable conjugate to R)
is, with ``tau = gamma t`` and ``E = exp(-tau)``::

    rho(R, r, t) = (pi M)^(-1/2) exp(C(r) - (R - c_s + i K r)^2 / M)
    C(r) = -[E^2 / 4d^2 + D (1 - E^2) / (8 hbar^2 gamma)] r^2
           + i s epsilon (1 - E) r / (hbar gamma)
    c_s  = s epsilon (tau - 1 + E) / (m gamma^2)
    K    = -hbar E (1 - E) / (2 d^2 m gamma) - D (1 - E)^2 / (4 m gamma^2 hbar)

where ``M(tau)`` is :func:`big_m`.  The diagonal is a normalised Gaussian of
variance ``M/2`` centred on ``c_s``.  :func:`pde_oracle_evolve` integrates
the master equation directly on an (x, y) grid and is used to check all of
the above.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class SpatialParams:
    m: float
    gamma: float
    D: float
    epsilon: float
    d: float
    hbar: float = 1.0

    def __post_init__(self):
        for name in ("m", "gamma", "D", "d", "hbar"):
            val = getattr(self, name)
            if not val > 0:
                raise ValueError(f"{name} must be > 0, got {val!r}")
        if not self.epsilon >= 0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon!r}")

    @property
    def drift_velocity(self) -> float:
        """Terminal speed epsilon / (m gamma)."""
        return self.epsilon / (self.m * self.gamma)


def _sign(j: int) -> int:
    if j == 1:
        return 1
    if j == 2:
        return -1
    raise ValueError(f"particle tag must be 1 or 2, got {j!r}")


def _tau(p: SpatialParams, t: float) -> float:
    t = float(t)
    if not t >= 0.0:
        raise ValueError(f"time must be non-negative, got {t!r}")
    return p.gamma * t


def big_m(p: SpatialParams, t: float) -> float:
    """Squared-width function M; the position variance is M/2."""
    tau = _tau(p, t)
    em1 = -math.expm1(-tau)  # 1 - e^-tau, accurate for small tau
    spread = p.hbar**2 / (p.d**2 * p.m**2 * p.gamma**2) * em1**2
    # 2 tau - 3 + 4 e^-tau - e^-2tau loses all digits for small tau; its series starts at 2 tau^3 / 3.
    if tau < 1e-3:
        poly = tau**3 * (2 / 3 - tau / 2 + 7 * tau**2 / 30)
    else:
        poly = 2 * tau - 3 + 4 * math.exp(-tau) - math.exp(-2 * tau)
    diffusion = p.D / (2 * p.m**2 * p.gamma**3) * poly
    return p.d**2 + spread + diffusion


def long_time_slope(p: SpatialParams) -> float:
    """Asymptotic dM/dt = D / (m^2 gamma^2)."""
    return p.D / (p.m**2 * p.gamma**2)


def wavepacket_center(p: SpatialParams, j: int, t: float) -> float:
    tau = _tau(p, t)
    # tau - 1 + e^-tau = tau - (1 - e^-tau)
    drift = tau + math.expm1(-tau) if tau > 1e-4 else tau**2 / 2 - tau**3 / 6 + tau**4 / 24
    return _sign(j) * p.epsilon / (p.m * p.gamma**2) * drift


def asymptotic_center(p: SpatialParams, j: int, t: float) -> float:
    """Long-time form +/- epsilon tau / (m gamma^2) = +/- epsilon t / (m gamma)."""
    tau = _tau(p, t)
    return _sign(j) * p.epsilon * tau / (p.m * p.gamma**2)


def separation(p: SpatialParams, t: float) -> float:
    return wavepacket_center(p, 1, t) - wavepacket_center(p, 2, t)


def asymptotic_separation(p: SpatialParams, t: float) -> float:
    """2 epsilon t / (m gamma)."""
    return asymptotic_center(p, 1, t) - asymptotic_center(p, 2, t)


def coherence_exponent(p: SpatialParams, t: float) -> float:
    """Coefficient A(t) of the Gaussian coherence envelope exp(-A r^2)."""
    tau = _tau(p, t)
    e2 = math.exp(-2 * tau)
    return e2 / (4 * p.d**2) + p.D / (8 * p.hbar**2 * p.gamma) * (-math.expm1(-2 * tau))


def coherence_factor(p: SpatialParams, r: float, t: float) -> float:
    """|int rho(R, r, t) dR|, the surviving coherence at offset r (1 at r = 0)."""
    return math.exp(-coherence_exponent(p, t) * r * r)


def _closed_form_coeffs(p: SpatialParams, j: int, t: float):
    tau = _tau(p, t)
    s = _sign(j)
    e = math.exp(-tau)
    em1 = -math.expm1(-tau)
    M = big_m(p, t)
    center = wavepacket_center(p, j, t)
    k = -p.hbar * e * em1 / (2 * p.d**2 * p.m * p.gamma) - p.D * em1**2 / (4 * p.m * p.gamma**2 * p.hbar)
    phase = s * p.epsilon * em1 / (p.hbar * p.gamma)
    return M, center, k, coherence_exponent(p, t), phase


def rho_spatial(p: SpatialParams, j: int, R, r, t: float):
    """Closed-form rho at centre coordinate R and offset r (array-friendly)."""
    M, center, k, a, phase = _closed_form_coeffs(p, j, t)
    R = np.asarray(R, dtype=float)
    r = np.asarray(r, dtype=float)
    z = R - center + 1j * k * r
    val = np.exp(-a * r * r + 1j * phase * r - z * z / M) / math.sqrt(math.pi * M)
    return val if val.ndim else complex(val)


def rho_xy(p: SpatialParams, j: int, x, y, t: float):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return rho_spatial(p, j, 0.5 * (x + y), x - y, t)


# --------------------------------------------------------------------------
# Finite-difference oracle
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Grid:
    x_min: float
    x_max: float
    n_points: int

    def __post_init__(self):
        if self.n_points < 8:
            raise ValueError(f"n_points must be >= 8, got {self.n_points!r}")
        if not self.x_max > self.x_min:
            raise ValueError("x_max must exceed x_min")

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n_points)

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.n_points - 1)


# RK4 is stable on the imaginary axis up to |lambda h| = 2*sqrt(2); keep a margin.
RK4_IMAG_LIMIT = 2.5
# Largest |eigenvalue| * dx of the fourth-order central first derivative.
D1_SPECTRAL_RADIUS = 1.3722


def stable_dt(p: SpatialParams, grid: Grid) -> float:
    """Largest time step the oracle accepts.

    The kinetic and multiplicative sub-steps are exact, so only the friction
    sub-step (RK4 over half a step) limits ``dt``: its generator
    ``-(gamma/2) u (d_x - d_y)`` has spectral radius at most
    ``gamma * |u|_max * 1.3722 / dx`` with fourth-order differences, giving
    ``dt <= 2 * 2.5 * dx / (1.3722 gamma |u|_max)``.
    """
    u_max = grid.x_max - grid.x_min
    return 2 * RK4_IMAG_LIMIT * grid.dx / (D1_SPECTRAL_RADIUS * p.gamma * u_max)


@dataclass(frozen=True)
class OracleResult:
    x: np.ndarray
    rho: np.ndarray
    t: float

    @property
    def dx(self) -> float:
        return float(self.x[1] - self.x[0])

    @property
    def diagonal(self) -> np.ndarray:
        return np.real(np.diag(self.rho))

    @property
    def trace(self) -> float:
        return float(np.sum(self.diagonal) * self.dx)

    def mean_position(self) -> float:
        w = self.diagonal
        return float(np.sum(self.x * w) / np.sum(w))

    def position_variance(self) -> float:
        w = self.diagonal
        mu = np.sum(self.x * w) / np.sum(w)
        return float(np.sum((self.x - mu) ** 2 * w) / np.sum(w))

    def integrated_coherence(self, offset_index: int) -> complex:
        """Sum over R of rho(x, y) along the off-diagonal x - y = offset_index * dx."""
        return complex(np.sum(np.diagonal(self.rho, offset=-offset_index)) * self.dx)

    def to_csv(self, path) -> None:
        """Write rows ``x, y, re, im``."""
        xs, ys = np.meshgrid(self.x, self.x, indexing="ij")
        with open(Path(path), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["x", "y", "re", "im"])
            for xv, yv, v in zip(xs.ravel(), ys.ravel(), self.rho.ravel()):
                w.writerow([f"{xv:.17g}", f"{yv:.17g}", f"{v.real:.17g}", f"{v.imag:.17g}"])


def _check_grid(p: SpatialParams, j: int, grid: Grid, t_final: float) -> None:
    center = wavepacket_center(p, j, t_final)
    half = 6 * math.sqrt(big_m(p, t_final))
    # Initial packet too: half-width at t = 0 is 6 d.
    lo = min(center - half, -6 * p.d)
    hi = max(center + half, 6 * p.d)
    if grid.x_min > lo or grid.x_max < hi:
        raise ValueError(
            f"grid [{grid.x_min}, {grid.x_max}] does not contain the packet: need at least [{lo:.6g}, {hi:.6g}]"
            " (centre +/- 6 sqrt(M))"
        )


def _d1(rho, dx, axis):
    """Fourth-order central first derivative, zero outside the grid."""
    pad = [(0, 0), (0, 0)]
    pad[axis] = (2, 2)
    f = np.pad(rho, pad)
    n = rho.shape[axis]
    sl = lambda k: f[k : k + n] if axis == 0 else f[:, k : k + n]
    return (sl(0) - 8 * sl(1) + 8 * sl(3) - sl(4)) / (12 * dx)


def _friction(rho, dx, u, gamma):
    return -0.5 * gamma * u * (_d1(rho, dx, 0) - _d1(rho, dx, 1))


def initial_rho(p: SpatialParams, x: np.ndarray) -> np.ndarray:
    phi = (math.pi * p.d**2) ** -0.25 * np.exp(-(x**2) / (2 * p.d**2))
    return np.outer(phi, phi).astype(complex)


def pde_oracle_evolve(
    p: SpatialParams, j: int, grid: Grid, t_final: float, dt: float | None = None
) -> OracleResult:
    """Integrate the master equation on an (x, y) grid.

    Strang splitting per step ``h``: half-step of the multiplicative
    decoherence/force terms (exact), half-step of friction (RK4, fourth-order
    differences), a full kinetic step (exact, FFT on the periodic box), then
    the two half-steps in reverse order.  The packet must stay well inside the
    box, which :func:`_check_grid` enforces.  ``dt`` must not exceed
    :func:`stable_dt`; ``None`` picks the bound, shrunk to land on
    ``t_final`` exactly.
    """
    s = _sign(j)
    _tau(p, t_final)
    _check_grid(p, j, grid, t_final)
    limit = stable_dt(p, grid)
    if dt is None:
        dt = limit
    if not 0 < dt <= limit:
        raise ValueError(f"dt={dt!r} violates the friction sub-step stability bound {limit:.6g} for this grid")
    n_steps = math.ceil(t_final / dt - 1e-12) if t_final > 0 else 0
    h = t_final / n_steps if n_steps else 0.0
    x = grid.x
    dx = grid.dx
    u = x[:, None] - x[None, :]
    k = 2 * np.pi * np.fft.fftfreq(grid.n_points, d=dx)
    kinetic = np.exp(-1j * h * p.hbar / (2 * p.m) * (k[:, None] ** 2 - k[None, :] ** 2))
    potential_half = np.exp(0.5 * h * (-(p.D / (4 * p.hbar**2)) * u * u + 1j * s * (p.epsilon / p.hbar) * u))
    hh = 0.5 * h

    def friction_half(rho):
        k1 = _friction(rho, dx, u, p.gamma)
        k2 = _friction(rho + 0.5 * hh * k1, dx, u, p.gamma)
        k3 = _friction(rho + 0.5 * hh * k2, dx, u, p.gamma)
        k4 = _friction(rho + hh * k3, dx, u, p.gamma)
        return rho + (hh / 6) * (k1 + 2 * k2 + 2 * k3 + k4)

    rho = initial_rho(p, x)
    for _ in range(n_steps):
        rho = friction_half(rho * potential_half)
        rho = np.fft.ifft2(np.fft.fft2(rho) * kinetic)
        rho = friction_half(rho) * potential_half
    return OracleResult(x=x, rho=rho, t=float(t_final))
