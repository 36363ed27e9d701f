"""Two-spin linear algebra: Pauli matrices, tensor products and the singlet.

The two-spin basis is ordered (up-up, up-down, down-up, down-down) with
particle 1 as the left Kronecker factor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_FLOOR = -1e-10
UNIT_TOL = 1e-12
POLARIZATION_TOL = 1e-10

IDENTITY2 = np.eye(2, dtype=complex)
IDENTITY4 = np.eye(4, dtype=complex)

_PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}
AXES = ("x", "y", "z")


class SpinAlgebraError(ValueError):
    """Invalid input to a spin-algebra operation."""


def _finite(arr: np.ndarray, what: str) -> np.ndarray:
    if not np.all(np.isfinite(arr)):
        raise SpinAlgebraError(f"{what} has non-finite entries")
    return arr


def is_hermitian(mat: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    return bool(np.max(np.abs(mat - mat.conj().T)) <= tol)


def as_direction(n) -> np.ndarray:
    """Return ``n`` as a float 3-vector, rejecting anything that is not unit length."""
    v = _finite(np.asarray(n, dtype=float).reshape(3), "direction")
    if abs(float(v @ v) - 1.0) > UNIT_TOL:
        raise SpinAlgebraError(f"direction {v.tolist()} is not a unit vector (|n|^2 = {float(v @ v)!r})")
    return v


def as_polarization(p) -> np.ndarray:
    v = _finite(np.asarray(p, dtype=float).reshape(3), "polarization")
    norm = float(np.sqrt(v @ v))
    if norm > 1.0 + POLARIZATION_TOL:
        raise SpinAlgebraError(f"polarization {v.tolist()} has norm {norm!r} > 1")
    return v


@dataclass(frozen=True, eq=False)
class DensityMatrix4:
    """Validated two-spin density matrix (Hermitian, unit trace, PSD)."""

    mat: np.ndarray

    def __post_init__(self):
        mat = _finite(np.array(self.mat, dtype=complex).reshape(4, 4), "density matrix")
        dev = np.max(np.abs(mat - mat.conj().T))
        if dev > HERMITIAN_TOL:
            raise SpinAlgebraError(f"density matrix not Hermitian (max deviation {dev:.3e})")
        tr = np.trace(mat)
        if abs(tr - 1.0) > TRACE_TOL:
            raise SpinAlgebraError(f"density matrix trace {tr!r} != 1")
        lowest = float(np.linalg.eigvalsh(mat)[0])
        if lowest < PSD_FLOOR:
            raise SpinAlgebraError(f"density matrix not positive semidefinite (eigenvalue {lowest:.3e})")
        mat.setflags(write=False)
        object.__setattr__(self, "mat", mat)

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.mat)


def pauli(axis: str) -> np.ndarray:
    try:
        return _PAULI[axis].copy()
    except KeyError:
        raise SpinAlgebraError(f"unknown Pauli axis {axis!r}; expected one of x, y, z") from None


def sigma_dot(n) -> np.ndarray:
    """``n . sigma`` for a unit direction ``n``."""
    v = as_direction(n)
    return v[0] * _PAULI["x"] + v[1] * _PAULI["y"] + v[2] * _PAULI["z"]


def _sigma_dot_vec(p: np.ndarray) -> np.ndarray:
    return p[0] * _PAULI["x"] + p[1] * _PAULI["y"] + p[2] * _PAULI["z"]


def tensor(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product with particle 1 (``a``) as the left factor."""
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def singlet_density() -> DensityMatrix4:
    """(1/4)(1x1 - sigma_1 . sigma_2), i.e. |psi><psi| for the spin singlet."""
    ss = sum(tensor(_PAULI[ax], _PAULI[ax]) for ax in AXES)
    return DensityMatrix4(0.25 * (IDENTITY4 - ss))


def expectation(rho: DensityMatrix4, obs: np.ndarray) -> float:
    obs = np.asarray(obs, dtype=complex)
    if obs.shape != (4, 4):
        raise SpinAlgebraError(f"observable must be 4x4, got shape {obs.shape}")
    if not is_hermitian(obs):
        raise SpinAlgebraError("observable is not Hermitian")
    val = np.trace(rho.mat @ obs)
    if abs(val.imag) >= 1e-10:
        raise SpinAlgebraError(f"expectation value has imaginary part {val.imag:.3e}")
    return float(val.real)


def from_polarizations(p1, p2) -> DensityMatrix4:
    """(1/4)(1x1 + (sigma_1 . P1)(sigma_2 . P2))."""
    v1, v2 = as_polarization(p1), as_polarization(p2)
    return DensityMatrix4(0.25 * (IDENTITY4 + tensor(_sigma_dot_vec(v1), _sigma_dot_vec(v2))))


def decompose(rho2: np.ndarray) -> tuple[float, np.ndarray]:
    """Split a Hermitian 2x2 matrix as ``(1/2)(w 1 + W . sigma)``.

    Returns ``(w, P)`` with ``W = w P``; when ``w == 0`` the raw vector ``W``
    is returned in place of ``P``.
    """
    rho2 = np.asarray(rho2, dtype=complex).reshape(2, 2)
    if not is_hermitian(rho2):
        raise SpinAlgebraError("2x2 matrix is not Hermitian")
    weight = float(np.trace(rho2).real)
    w_vec = np.array([float(np.trace(rho2 @ _PAULI[ax]).real) for ax in AXES])
    if weight == 0.0:
        return weight, w_vec
    return weight, w_vec / weight


def reassemble(weight: float, p) -> np.ndarray:
    """Inverse of :func:`decompose`."""
    p = np.asarray(p, dtype=float).reshape(3)
    w_vec = p * weight if weight != 0.0 else p
    return 0.5 * (weight * IDENTITY2 + _sigma_dot_vec(w_vec))


def spin_rotation(n, theta: float) -> np.ndarray:
    """exp(-i theta n.sigma / 2) for a unit axis ``n``."""
    return np.cos(theta / 2) * IDENTITY2 - 1j * np.sin(theta / 2) * sigma_dot(n)
