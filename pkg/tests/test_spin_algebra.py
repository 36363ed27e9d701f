import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bell_decoherence.spin_algebra import (
    IDENTITY2,
    IDENTITY4,
    DensityMatrix4,
    SpinAlgebraError,
    decompose,
    expectation,
    from_polarizations,
    pauli,
    reassemble,
    sigma_dot,
    singlet_density,
    spin_rotation,
    tensor,
)

from .conftest import random_unit


@pytest.mark.parametrize("axis", ["x", "y", "z"])
def test_pauli_properties(axis):
    s = pauli(axis)
    assert np.allclose(s, s.conj().T)
    assert abs(np.trace(s)) == 0
    assert np.allclose(s @ s, IDENTITY2)


def test_pauli_z_diagonal():
    assert np.diag(pauli("z")).tolist() == [1, -1]


def test_pauli_bad_axis():
    with pytest.raises(SpinAlgebraError):
        pauli("w")


def test_sigma_dot_basis_directions():
    assert np.array_equal(sigma_dot([0, 0, 1]), pauli("z"))
    assert np.array_equal(sigma_dot([1, 0, 0]), pauli("x"))


def test_sigma_dot_rejects_non_unit():
    with pytest.raises(SpinAlgebraError, match="unit"):
        sigma_dot([0, 0, 2])


def test_sigma_dot_squares_to_identity(rng):
    for _ in range(50):
        s = sigma_dot(random_unit(rng))
        assert np.allclose(s @ s, IDENTITY2, atol=1e-14)
        assert np.allclose(np.linalg.eigvalsh(s), [-1, 1], atol=1e-14)


def test_tensor_examples():
    assert np.array_equal(tensor(IDENTITY2, IDENTITY2), IDENTITY4)
    assert np.trace(tensor(pauli("z"), pauli("z"))) == 0
    assert np.diag(tensor(pauli("z"), IDENTITY2)).real.tolist() == [1, 1, -1, -1]


def test_tensor_bilinear_and_trace_multiplicative(rng):
    for _ in range(20):
        a, b, c = (rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)) for _ in range(3))
        alpha = complex(rng.standard_normal(), rng.standard_normal())
        assert np.allclose(tensor(alpha * a + b, c), alpha * tensor(a, c) + tensor(b, c))
        assert np.allclose(tensor(c, alpha * a + b), alpha * tensor(c, a) + tensor(c, b))
        assert np.isclose(np.trace(tensor(a, b)), np.trace(a) * np.trace(b))


# Two-spin singlet written out element by element in the basis
# (uu, ud, du, dd): (1/2)[|ud><ud| + |du><du| - |ud><du| - |du><ud|].
SINGLET_EXPLICIT = 0.5 * np.array(
    [
        [0, 0, 0, 0],
        [0, 1, -1, 0],
        [0, -1, 1, 0],
        [0, 0, 0, 0],
    ],
    dtype=complex,
)


def test_singlet_matches_explicit_matrix():
    rho = singlet_density()
    assert np.max(np.abs(rho.mat - SINGLET_EXPLICIT)) < 1e-15


def test_singlet_projector_of_state_vector():
    psi = np.array([0, 1, -1, 0]) / math.sqrt(2)
    assert np.allclose(singlet_density().mat, np.outer(psi, psi.conj()), atol=1e-15)


def test_singlet_trace_and_spectrum():
    rho = singlet_density()
    assert abs(np.trace(rho.mat) - 1) < 1e-12
    assert np.allclose(np.sort(rho.eigenvalues()), [0, 0, 0, 1], atol=1e-12)


@pytest.mark.parametrize(
    "theta, expected",
    [(0.0, -1.0), (math.pi / 2, 0.0), (math.pi / 3, -0.5)],
)
def test_singlet_correlation_examples(theta, expected):
    a = [0, 0, 1]
    b = [math.sin(theta), 0, math.cos(theta)]
    val = expectation(singlet_density(), tensor(sigma_dot(a), sigma_dot(b)))
    assert val == pytest.approx(expected, abs=1e-12)


def test_correlation_law_random_pairs(rng):
    rho = singlet_density()
    for _ in range(200):
        a, b = random_unit(rng), random_unit(rng)
        val = expectation(rho, tensor(sigma_dot(a), sigma_dot(b)))
        assert abs(val + a @ b) < 1e-12


def test_expectation_rejects_non_hermitian():
    obs = np.zeros((4, 4), dtype=complex)
    obs[0, 1] = 1.0
    with pytest.raises(SpinAlgebraError, match="Hermitian"):
        expectation(singlet_density(), obs)


@given(
    theta=st.floats(0, 2 * math.pi),
    phi=st.floats(0, 2 * math.pi),
    angle=st.floats(-10, 10),
)
@settings(max_examples=100, deadline=None)
def test_singlet_rotation_invariant(theta, phi, angle):
    n = [math.sin(theta) * math.cos(phi), math.sin(theta) * math.sin(phi), math.cos(theta)]
    n = np.array(n) / np.linalg.norm(n)
    u = spin_rotation(n, angle)
    big = tensor(u, u)
    rho = singlet_density().mat
    assert np.max(np.abs(big @ rho @ big.conj().T - rho)) < 1e-10


def test_from_polarizations_zero_is_maximally_mixed():
    assert np.allclose(from_polarizations([0, 0, 0], [0, 0, 0]).mat, IDENTITY4 / 4)


def test_superposition_of_three_pairs_gives_singlet():
    # Sum of (sigma_1 . e_a)(sigma_2 . -e_a) over the three axes, added to 1x1.
    acc = IDENTITY4.copy()
    for e in np.eye(3):
        pair = from_polarizations(e, -e).mat
        acc += 4 * pair - IDENTITY4
    assert np.allclose(acc / 4, singlet_density().mat, atol=1e-15)


def test_from_polarizations_antiparallel_z_spectrum():
    # Direct eigendecomposition: (1/4)(1 - sz sz) = diag(0, 1/2, 1/2, 0).
    rho = from_polarizations([0, 0, 1], [0, 0, -1])
    assert np.allclose(np.sort(rho.eigenvalues()), [0, 0, 0.5, 0.5], atol=1e-15)


def test_from_polarizations_rejects_over_unit():
    with pytest.raises(SpinAlgebraError, match="norm"):
        from_polarizations([0, 0, 1.01], [0, 0, 0])


def test_density_matrix_validation():
    with pytest.raises(SpinAlgebraError, match="trace"):
        DensityMatrix4(IDENTITY4)
    with pytest.raises(SpinAlgebraError, match="positive"):
        DensityMatrix4(np.diag([1.5, -0.5, 0, 0]))
    bad = IDENTITY4 / 4
    bad = bad.copy()
    bad[0, 1] = 0.1
    with pytest.raises(SpinAlgebraError, match="Hermitian"):
        DensityMatrix4(bad)


def test_decompose_examples():
    w, p = decompose(IDENTITY2 / 2)
    assert w == pytest.approx(1) and np.allclose(p, 0)
    w, p = decompose(np.diag([1, 0]))
    assert w == pytest.approx(1) and np.allclose(p, [0, 0, 1])


hermitian_2x2 = st.tuples(*(st.floats(-5, 5, allow_subnormal=False) for _ in range(4))).map(
    lambda v: np.array([[v[0], v[2] + 1j * v[3]], [v[2] - 1j * v[3], v[1]]])
)


@given(hermitian_2x2)
@settings(max_examples=200, deadline=None)
def test_decompose_round_trip(m):
    w, p = decompose(m)
    assert np.max(np.abs(reassemble(w, p) - m)) < 1e-12
