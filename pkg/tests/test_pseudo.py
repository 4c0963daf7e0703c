import math
import warnings

import mpmath
import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from fockquad.hermite import hermite_roots
from fockquad.pseudo import (
    MOMENT_HEADER,
    NormalizationMode,
    build_state,
    d_approx_oscillatory,
    d_approx_quadratic,
    d_measure,
    d_measure_logform,
    d_measure_ratio,
    expectation_approx,
    expectation_xi,
    inner_product,
    matrix_element_xi,
    moment_profile_csv,
    moments,
    special_state_residual,
    variance_full,
    variance_full_approx,
    variance_truncated,
    variance_truncated_approx,
    wavefunction,
)
from fockquad.quadrature import build

from oracles import hermite_function_mp, position_matrix, unit_state_mp

UNIT = NormalizationMode.UNIT_NORM
KET = NormalizationMode.TRUNCATED_POSITION_KET


def _dense_moments(lam, cap):
    v = np.array([float(c) for c in unit_state_mp(lam, cap)])
    x = position_matrix(cap)
    mean = v @ x @ v
    second_trunc = v @ x @ x @ v
    second_full = second_trunc + (cap + 1) / 2.0 * v[cap] ** 2
    r = x @ v - lam * v
    return v, mean, second_trunc - mean ** 2, second_full - mean ** 2, r @ r


# -- states ---------------------------------------------------------------------

def test_state_at_origin():
    s = build_state(0.0, 2)
    assert np.allclose(s.coeffs, [math.sqrt(2 / 3), 0.0, -math.sqrt(1 / 3)], atol=1e-16)
    assert s.norm_squared() == pytest.approx(1.0, abs=1e-15)


def test_position_ket_normalisation():
    lam = 1.3
    s = build_state(lam, 5, KET)
    want = [hermite_function_mp(n, lam) for n in range(6)]
    assert np.allclose(s.coeffs, want, rtol=1e-13)


def test_roots_give_exact_eigenvectors():
    cap = 12
    for lam in hermite_roots(cap + 1).roots:
        s = build_state(lam, cap)
        assert np.linalg.norm(s.residual()) < 1e-12
        assert d_measure(lam, cap) < 1e-12


@pytest.mark.xfail(strict=True, reason="the weight on |N> at lambda=10, N=16 is 0.906")
def test_collapse_to_last_ket_as_stated():
    assert build_state(10.0, 16).coeffs[16] ** 2 > 0.99


def test_collapse_to_last_ket_observed():
    weights = [build_state(lam, 16).coeffs[16] ** 2 for lam in (10.0, 15.0, 20.0, 28.0, 40.0)]
    assert np.all(np.diff(weights) > 0)
    assert 0.9 < weights[0] < 0.91
    assert weights[-1] > 0.99


def test_state_domain():
    with pytest.raises(ValueError):
        build_state(0.0, -1)
    with pytest.raises(ValueError):
        build_state(float("inf"), 3)


@given(st.floats(-12, 12), st.integers(0, 100))
def test_residual_has_one_component(lam, cap):
    s = build_state(lam, cap)
    r = s.residual()
    scale = math.sqrt(2 * cap + 1) + abs(lam)
    assert np.max(np.abs(r[:-1]), initial=0.0) < 1e-12 * scale
    assert r[-1] == pytest.approx(s.residual_scalar(), rel=1e-9, abs=1e-12 * scale)
    assert d_measure(lam, cap) == pytest.approx(float(r @ r), rel=1e-11, abs=1e-24 * scale)


@given(st.floats(-12, 12), st.integers(0, 60))
def test_unit_norm(lam, cap):
    assert build_state(lam, cap).norm_squared() == pytest.approx(1.0, abs=1e-13)


# -- exactness measure ----------------------------------------------------------

@given(st.floats(-10, 10), st.integers(1, 80))
def test_three_forms_agree(lam, cap):
    s = build_state(lam, cap)
    r_top = abs(s.residual_scalar()) / math.sqrt((cap + 1) / 2.0)
    assume(r_top > 1e-6)
    d = d_measure(lam, cap)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        assert d_measure_logform(lam, cap) == pytest.approx(d, rel=1e-9)
    assert d_measure_ratio(lam, cap) == pytest.approx(d, rel=1e-9)


def test_logform_examples():
    cap = 10
    roots = hermite_roots(cap + 1).roots
    mid = 0.5 * (roots[5] + roots[6]) + 0.05
    assert d_measure_logform(mid, cap) == pytest.approx(d_measure(mid, cap), rel=1e-9)
    assert d_measure_logform(1e4, cap) / 1e8 == pytest.approx(1.0, rel=1e-6)
    with pytest.raises(ValueError):
        d_measure_logform(roots[3], cap)


@pytest.mark.parametrize("cap", [5, 10, 25, 50])
def test_peaks_at_roots_of_lower_polynomial(cap):
    for lam in hermite_roots(cap).roots:
        assert 0.4 <= d_measure(lam, cap) <= 1.0


@pytest.mark.parametrize("cap", [3, 10, 40])
def test_peak_zero_alternation(cap):
    zeros = hermite_roots(cap + 1).roots
    peaks = hermite_roots(cap).roots
    assert np.all((zeros[:-1] < peaks) & (peaks < zeros[1:]))
    for a, b, p in zip(zeros[:-1], zeros[1:], peaks):
        lo = expectation_xi(0.5 * (a + p), cap) - 0.5 * (a + p)
        hi = expectation_xi(0.5 * (p + b), cap) - 0.5 * (p + b)
        assert lo * hi < 0
        assert expectation_xi(p, cap) == pytest.approx(p, abs=1e-12)


def _central_peak_max(cap):
    edge = math.sqrt(2 * cap + 1)
    grid = np.linspace(-edge / 2, edge / 2, 4001)
    return float(np.max(d_measure(grid, cap)))


@pytest.mark.xfail(strict=True, reason="the oscillation of d_N peaks near 0.5-0.7, not at 1")
@pytest.mark.parametrize("cap", [15, 50, 100])
def test_oscillation_amplitude_band_as_stated(cap):
    assert 0.9 <= _central_peak_max(cap) <= 1.0


@pytest.mark.parametrize("cap", [15, 50, 100])
def test_oscillation_amplitude_observed(cap):
    assert 0.5 <= _central_peak_max(cap) <= 0.7


def test_large_lambda_quadratic_series():
    assert d_measure(30.0, 15) == pytest.approx(900 - 22.5 - 150 / 3600, rel=1e-3)
    assert d_approx_quadratic(30.0, 15) == pytest.approx(900 - 22.5 + 15 * (-10) / 3600, rel=1e-14)
    big = 100 * math.sqrt(31)
    assert d_approx_quadratic(big, 15) / d_measure(big, 15) == pytest.approx(1.0, abs=1e-6)
    assert math.isfinite(d_approx_quadratic(math.sqrt(31) * 1.001, 15))
    with pytest.raises(ValueError):
        d_approx_quadratic(3.0, 15)
    assert d_approx_quadratic(30.0, 15, terms=1) == 900.0


def test_oscillatory_approximant():
    for cap in (4, 10, 16):
        assert d_approx_oscillatory(0.0, cap).value == pytest.approx(0.0, abs=1e-15)
    a = d_approx_oscillatory(2.0, 15)
    assert not a.pole_flag
    assert abs(a.value - d_measure(2.0, 15)) < 0.05
    with pytest.raises(ValueError):
        d_approx_oscillatory(6.0, 15)


# -- moments --------------------------------------------------------------------

@given(st.floats(-9, 9), st.integers(1, 60))
def test_moments_match_dense_oracle(lam, cap):
    v, mean, var_t, var_f, d = _dense_moments(lam, cap)
    scale = 1.0 + lam * lam
    assert expectation_xi(lam, cap) == pytest.approx(mean, abs=1e-12 * scale)
    assert variance_truncated(lam, cap) == pytest.approx(var_t, abs=1e-11 * scale)
    assert variance_full(lam, cap) == pytest.approx(var_f, abs=1e-11 * scale)
    assert variance_truncated(lam, cap) >= 0.0


@given(st.floats(-15, 15), st.integers(1, 100))
def test_variance_decomposition(lam, cap):
    s = build_state(lam, cap)
    gap = variance_full(lam, cap) - variance_truncated(lam, cap)
    assert gap == pytest.approx((cap + 1) / 2.0 * s.coeffs[cap] ** 2, abs=1e-13 * (1 + lam * lam))
    assert gap >= 0


def test_expectation_examples():
    cap = 9
    for lam in hermite_roots(cap + 1).roots:
        assert expectation_xi(lam, cap) == pytest.approx(lam, abs=1e-12)
        assert variance_truncated(lam, cap) == pytest.approx(0.0, abs=1e-12)
    assert expectation_xi(10.0, 16) == pytest.approx(1.712, abs=5e-2)
    assert expectation_approx(0.0, 16, "oscillatory").value == 0.0
    assert expectation_approx(30.0, 16, "quadratic").value == pytest.approx(16 / 30 + 16 * 14 / 54000, rel=1e-14)
    with pytest.raises(ValueError):
        expectation_approx(1.0, 16, "quadratic")
    with pytest.raises(ValueError):
        expectation_approx(1.0, 0, "oscillatory")


def test_expectation_oscillatory_sign():
    # the printed fast phase carries "+"; the sign-corrected form tracks the exact value
    exact = expectation_xi(3.0, 16)
    corrected = expectation_approx(3.0, 16, "oscillatory", printed=False)
    printed = expectation_approx(3.0, 16, "oscillatory")
    assert not corrected.pole_flag
    assert abs(corrected.value - exact) < 0.05
    assert abs(printed.value - exact) > 0.1


def test_variance_examples():
    for cap in (1, 4, 16, 100):
        assert variance_full(0.0, cap) == pytest.approx(0.5, abs=1e-12)
    assert variance_truncated(30.0, 8) == pytest.approx(4 - 8 * 11 / 3600, rel=1e-3)
    assert variance_full(30.0, 16) == pytest.approx(16.5 - 16 * 18 / 1800, rel=1e-3)
    assert variance_full_approx(0.0, 16, "oscillatory").value == pytest.approx(0.5, abs=1e-15)
    assert variance_full_approx(40.0, 16, "quadratic").value == pytest.approx(variance_full(40.0, 16), rel=1e-3)
    lam = hermite_roots(17).roots[11]
    s = build_state(lam, 16)
    assert variance_full(lam, 16) == pytest.approx(8.5 * s.coeffs[16] ** 2, abs=1e-12)


def test_variance_truncated_approximant():
    assert variance_truncated_approx(30.0, 8, "quadratic").value == pytest.approx(
        variance_truncated(30.0, 8), rel=1e-3)
    osc = variance_truncated_approx(1.1, 16, "oscillatory")
    assert osc.value == pytest.approx(d_measure(1.1, 16), rel=1e-15)


def test_full_variance_oscillatory_band_central():
    grid = np.linspace(-2.0, 2.0, 81)
    for lam in grid:
        a = variance_full_approx(lam, 16, "oscillatory")
        if not a.pole_flag:
            assert abs(a.value - variance_full(lam, 16)) < 0.1


def _min_full_dispersion(cap, lam0=5.0):
    grid = np.linspace(-lam0, lam0, 4001)
    return float(np.min(variance_full(grid, cap)))


@pytest.mark.xfail(strict=True, reason="the deficit below 1/2 at N=100 is about 0.13")
def test_dispersion_floor_as_stated():
    assert 0.5 - _min_full_dispersion(100) < 0.02


def test_dispersion_floor_observed():
    deficits = [0.5 - _min_full_dispersion(n) for n in (10, 25, 50, 100)]
    assert np.all(np.diff(deficits) < 0)
    assert 0 < deficits[-1] < 0.13 and deficits[0] < 0.22


def test_monotone_norm_growth():
    for lam in (1.0, 2.5):
        norms = [build_state(lam, n, KET).norm_squared() for n in range(1, 201)]
        assert np.all(np.diff(norms) > 0)
    # at the origin odd h_n vanish, so the norm only grows on even steps
    norms = [build_state(0.0, n, KET).norm_squared() for n in range(1, 201)]
    assert np.all(np.diff(norms) >= 0)
    assert norms[-1] > norms[0]


def test_moment_report_and_csv():
    rep = moments(hermite_roots(9).roots[2], 8)
    assert "eigenvalue" in rep.flags
    assert moments(20.0, 8).flags == "outside"
    text = moment_profile_csv([0.0, 0.5], 8)
    lines = text.splitlines()
    assert lines[0] == ",".join(MOMENT_HEADER)
    assert len(lines) == 3


# -- wavefunctions and overlaps ---------------------------------------------------

def test_wavefunction_direct_sum_and_norm():
    cap, lam = 9, 1.7
    coeffs = [float(c) for c in unit_state_mp(lam, cap)]
    for xi in (-2.0, 0.0, 1.7, 1.7 + 1e-10, 3.3):
        want = sum(c * hermite_function_mp(n, xi) for n, c in enumerate(coeffs))
        assert wavefunction(xi, lam, cap) == pytest.approx(want, abs=1e-11)
    root = hermite_roots(cap + 1).roots[7]
    x, w = np.polynomial.hermite.hermgauss(60)
    vals = wavefunction(x, root, cap)
    assert float(np.sum(w * np.exp(x ** 2) * vals ** 2)) == pytest.approx(1.0, abs=1e-10)


def _overlap_with_last_ket(lam):
    x, w = np.polynomial.hermite.hermgauss(80)
    psi = wavefunction(x, lam, 16)
    ket = np.array([hermite_function_mp(16, t) for t in x])
    return float(np.sum(w * np.exp(x ** 2) * psi * ket))


@pytest.mark.xfail(strict=True, reason="same weight as the coefficient, 0.906 at lambda=10")
def test_wavefunction_collapse_as_stated():
    assert _overlap_with_last_ket(10.0) ** 2 > 0.99


def test_wavefunction_collapse_and_parity():
    assert _overlap_with_last_ket(10.0) ** 2 == pytest.approx(build_state(10.0, 16).coeffs[16] ** 2, abs=1e-12)
    assert _overlap_with_last_ket(40.0) ** 2 > 0.99
    for xi in (0.3, 2.2):
        assert wavefunction(-xi, -1.4, 7) == pytest.approx(wavefunction(xi, 1.4, 7), rel=1e-12)


def test_inner_products():
    cap = 11
    zeros = hermite_roots(cap + 1).roots
    peaks = hermite_roots(cap).roots
    assert inner_product(0.8, 0.8, cap) == pytest.approx(1.0, abs=1e-14)
    assert abs(inner_product(zeros[2], zeros[7], cap)) < 1e-12
    assert abs(inner_product(peaks[1], peaks[4], cap)) < 1e-11
    a = np.array([float(c) for c in unit_state_mp(0.3, cap)])
    b = np.array([float(c) for c in unit_state_mp(-1.9, cap)])
    assert inner_product(0.3, -1.9, cap) == pytest.approx(float(a @ b), abs=1e-13)


def test_matrix_elements():
    cap = 11
    zeros = hermite_roots(cap + 1).roots
    lam = 0.9
    # a one-sided offset carries a first-order term; the symmetric one cancels it
    assert matrix_element_xi(lam + 1e-5, lam - 1e-5, cap) == pytest.approx(expectation_xi(lam, cap), abs=1e-8)
    assert matrix_element_xi(lam + 1e-10, lam, cap) == pytest.approx(expectation_xi(lam, cap), abs=1e-12)
    a = np.array([float(c) for c in unit_state_mp(lam + 1e-5, cap)])
    b = np.array([float(c) for c in unit_state_mp(lam, cap)])
    assert matrix_element_xi(lam + 1e-5, lam, cap) == pytest.approx(float(a @ position_matrix(cap) @ b), abs=1e-10)
    assert abs(matrix_element_xi(zeros[1], zeros[5], cap)) < 1e-11
    assert abs(matrix_element_xi(0.4, -2.0, cap) - matrix_element_xi(-2.0, 0.4, cap)) < 1e-12
    a = np.array([float(c) for c in unit_state_mp(0.4, cap)])
    b = np.array([float(c) for c in unit_state_mp(-2.0, cap)])
    assert matrix_element_xi(0.4, -2.0, cap) == pytest.approx(float(a @ position_matrix(cap) @ b), abs=1e-12)


@pytest.mark.xfail(strict=True, reason="first-order term of about 9e-7 at a one-sided offset of 1e-5")
def test_matrix_element_one_sided_limit_as_stated():
    assert abs(matrix_element_xi(0.9 + 1e-5, 0.9, 11) - expectation_xi(0.9, 11)) < 1e-8


@pytest.mark.parametrize("cap,lam,want", [(0, 1.0, 1.0), (16, 0.0, 8.0), (16, 3.0, 17.0)])
def test_special_state(cap, lam, want):
    assert special_state_residual(cap, lam) == pytest.approx(want, rel=1e-12)
