import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fockquad.quadrature import (
    EigenDecomposition,
    apply_projector,
    build,
    cayley_hamilton_residual,
    charpoly_value,
    diagonalize,
    minimal_polynomial_check,
    number_overlaps,
    projector_kernel,
)

from oracles import hermite_function_mp, hermite_mp, position_matrix


def test_build_small_matrices():
    assert build(0).matrix().tolist() == [[0.0]]
    m = build(1).matrix()
    s = math.sqrt(0.5)
    assert np.array_equal(m, np.array([[0.0, s], [s, 0.0]]))
    assert np.array_equal(build(12).matrix(), position_matrix(12))
    with pytest.raises(ValueError):
        build(-1)


@given(st.integers(0, 40), st.floats(-10, 10))
def test_rotated_matrix_is_hermitian_and_isospectral(cap, beta):
    q = build(cap, beta)
    m = q.matrix()
    assert np.allclose(m, m.conj().T, atol=1e-15)
    ev = np.linalg.eigvalsh(m)
    assert np.allclose(ev, np.linalg.eigvalsh(q.real_matrix()), atol=1e-12)


@given(st.integers(0, 60))
def test_traces(cap):
    m = build(cap).matrix()
    assert np.trace(m) == 0.0
    # tr xi_N^2 = N(N+1)/2
    assert np.trace(m @ m) == pytest.approx(cap * (cap + 1) / 2.0, rel=1e-13, abs=0)


def test_matvec_agrees_with_dense():
    q = build(30)
    v = np.random.default_rng(3).standard_normal(31)
    assert np.allclose(q.matvec(v), q.matrix() @ v, rtol=0, atol=1e-14)


@pytest.mark.parametrize("cap,lam,want", [(0, 0.7, 0.7), (1, 0.0, -0.5), (1, 2.0, 3.5)])
def test_charpoly_small(cap, lam, want):
    assert charpoly_value(build(cap), lam).to_float() == pytest.approx(want, rel=1e-15)


@pytest.mark.parametrize("lam", [-1.3, 0.2, 2.9])
def test_charpoly_against_determinant(lam):
    q = build(10, beta=0.8)
    det = np.linalg.det(lam * np.eye(11) - q.matrix()).real
    assert charpoly_value(q, lam).to_float() == pytest.approx(det, rel=1e-11)
    assert float(hermite_mp(11, lam) / 2 ** 11) == pytest.approx(det, rel=1e-11)


@pytest.mark.parametrize("cap", [1, 16, 100])
def test_diagonalize(cap):
    q = build(cap)
    dec = diagonalize(q)
    v = dec.eigenvectors
    assert np.max(np.abs(v.T @ v - np.eye(cap + 1))) < 1e-12
    m = q.matrix()
    assert np.max(np.abs(m @ v - v * dec.eigenvalues[None, :])) < 1e-12 * math.sqrt(2 * cap + 1)
    ev, ov = np.linalg.eigh(m)
    assert np.max(np.abs(ev - dec.eigenvalues)) < 1e-12
    cos = np.abs(np.sum(ov * v, axis=0))
    assert np.min(cos) > 1 - 1e-10


def test_eigendecomposition_json_round_trip():
    dec = diagonalize(build(6))
    back = EigenDecomposition.from_json(dec.to_json())
    assert back.cap == 6
    assert np.array_equal(back.eigenvalues, dec.eigenvalues)
    assert np.array_equal(back.eigenvectors, dec.eigenvectors)


def test_projector_kernel_against_direct_sum():
    cap = 12
    for x, y in [(0.0, 0.0), (1.1, -0.4), (2.5, 2.5), (-3.0, 0.7)]:
        want = sum(hermite_function_mp(n, x) * hermite_function_mp(n, y) for n in range(cap + 1))
        assert projector_kernel(cap, x, y) == pytest.approx(want, rel=1e-12, abs=1e-15)
    grid = np.linspace(-3, 3, 7)
    k = projector_kernel(cap, grid[:, None], grid[None, :])
    assert np.allclose(k, k.T, atol=1e-15)


def _psi(n):
    return lambda x: np.array([hermite_function_mp(n, float(t)) for t in np.ravel(x)]).reshape(np.shape(x))


def test_apply_projector_on_number_states():
    grid = np.linspace(-8, 8, 801)
    keep = apply_projector(5, _psi(2), grid)
    assert np.max(np.abs(keep - _psi(2)(grid))) < 1e-12
    drop = apply_projector(5, _psi(7), grid)
    assert np.max(np.abs(drop)) < 1e-12


def test_coherent_state_partial_sum():
    alpha = 1.2
    # <x|alpha> for real alpha
    psi = lambda x: math.pi ** -0.25 * np.exp(-0.5 * (np.asarray(x) - math.sqrt(2) * alpha) ** 2)
    c = number_overlaps(10, psi)
    want = np.array([math.exp(-alpha ** 2 / 2) * alpha ** n / math.sqrt(math.factorial(n))
                     for n in range(11)])
    assert np.max(np.abs(c - want)) < 1e-13
    # ||Pi_N psi||^2 is the Poisson partial sum
    assert float(np.sum(c ** 2)) == pytest.approx(
        math.exp(-alpha ** 2) * sum(alpha ** (2 * n) / math.factorial(n) for n in range(11)), rel=1e-13)


def test_projector_is_idempotent_on_samples():
    grid = np.linspace(-9, 9, 1201)
    psi = np.exp(-0.5 * (grid - 1.0) ** 2) * np.cos(2 * grid)
    once = apply_projector(8, psi, grid)
    twice = apply_projector(8, once, grid)
    assert np.max(np.abs(once - twice)) < 1e-8


def test_apply_projector_rejects_coarse_grid():
    with pytest.raises(ValueError):
        apply_projector(50, np.zeros(21), np.linspace(-5, 5, 21))
    f = apply_projector(3, _psi(1))
    assert callable(f) and f(0.5) == pytest.approx(hermite_function_mp(1, 0.5), rel=1e-12)


@pytest.mark.parametrize("cap", [0, 1, 5, 16, 40])
def test_cayley_hamilton(cap):
    assert cayley_hamilton_residual(cap) < 1e-10 * (cap + 1)


@pytest.mark.parametrize("cap", [1, 4, 16])
def test_minimal_polynomial(cap):
    rep = minimal_polynomial_check(cap)
    assert rep.ok
    assert rep.norms[0] == pytest.approx(1.0)
    with pytest.raises(ValueError):
        minimal_polynomial_check(0)
