import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fockquad.cdkernel import (
    ComplexRootSet,
    complex_zeros,
    hermite_int_coefficients,
    kernel,
    kernel_poly_coefficients,
    laurent_coefficient,
    zero_structure_report,
)
from fockquad.errors import ConvergenceError
from fockquad.hermite import orthonormal_rows

from oracles import direct_kernel, hermite_coefficients, hermite_exact


def test_kernel_examples():
    assert kernel(0.3, -2.0, 0).value == pytest.approx(1.0, rel=1e-15)
    assert kernel(0.0, 0.0, 0).value == 1.0
    assert kernel(0.0, 0.0, 2).value == pytest.approx(1.5, rel=1e-15)
    assert kernel(1.0, -1.0, 4).value == pytest.approx(direct_kernel(1.0, -1.0, 4), rel=1e-13)


@given(st.floats(-6, 6), st.floats(-6, 6), st.integers(0, 60))
def test_kernel_symmetric_and_matches_direct_sum(a, b, cap):
    k = kernel(a, b, cap).value
    assert k == kernel(b, a, cap).value or math.isclose(k, kernel(b, a, cap).value, rel_tol=1e-13)
    want = direct_kernel(a, b, cap)
    scale = math.sqrt(direct_kernel(a, a, cap) * direct_kernel(b, b, cap))
    assert abs(k - want) <= 1e-10 * scale


@given(st.floats(-8, 8), st.integers(0, 80))
def test_diagonal_is_positive(x, cap):
    assert kernel(x, x, cap).value >= 1.0


@pytest.mark.parametrize("x", [0.0, 0.37, 2.4, -5.1])
def test_confluent_forms_agree(x):
    cap = 20
    ref = direct_kernel(x, x, cap)
    for form in ("confluent-derivative", "confluent-algebraic", "auto"):
        ev = kernel(x, x, cap, form=form)
        assert ev.value == pytest.approx(ref, rel=1e-12), form
    near = kernel(x, x + 1e-10, cap)
    assert near.form_used == "confluent-algebraic"
    assert near.value == pytest.approx(ref, rel=1e-9)
    assert kernel(x, x + 0.3, cap).form_used == "bivariate"


def test_complex_arguments():
    z = 0.4 + 0.9j
    cap = 6
    rows, exps = orthonormal_rows(np.array(z), cap)
    h = np.ldexp(rows.real, exps) + 1j * np.ldexp(rows.imag, exps)
    assert kernel(z, z, cap).value == pytest.approx(complex(np.sum(h * h)), rel=1e-12)


def test_integer_hermite_coefficients():
    for n in range(0, 30):
        assert hermite_int_coefficients(n) == hermite_coefficients(n)


def test_kernel_polynomial_coefficients():
    assert kernel_poly_coefficients(0) == [1]
    assert kernel_poly_coefficients(1) == [2, 0, 4]
    # 8 (1 + 2 l^2 + (4 l^2 - 2)^2 / 8) = 12 + 16 l^4
    assert kernel_poly_coefficients(2) == [12, 0, 0, 0, 16]
    c = kernel_poly_coefficients(9)
    assert all(v == 0 for v in c[1::2]) and len(c) == 19
    x = Fraction(3, 7)
    value = sum(v * x ** j for j, v in enumerate(c))
    want = 2 ** 9 * math.factorial(9) * sum(hermite_exact(n, x) ** 2 / (2 ** n * math.factorial(n))
                                          for n in range(10))
    assert value == want
    with pytest.raises(ValueError):
        kernel_poly_coefficients(201)


def test_zeros_cap_one():
    rs = complex_zeros(1)
    assert rs.converged
    assert np.allclose(sorted(rs.roots.imag), [-math.sqrt(0.5), math.sqrt(0.5)], atol=1e-15)
    assert np.allclose(rs.roots.real, 0.0, atol=1e-15)
    assert zero_structure_report(rs).spacings.size == 0


def test_zeros_cap_five_structure():
    rs = complex_zeros(5)
    assert len(rs.roots) == 10 and rs.max_residual < 1e-9
    upper = rs.roots[rs.roots.imag > 0]
    assert len(upper) == 5
    assert np.all(np.abs(rs.roots.real) < math.sqrt(11))
    assert np.all(np.abs(rs.roots.imag) > 0.1)
    rep = zero_structure_report(rs)
    assert rep.conjugate_residual < 1e-12


def test_zeros_approach_real_axis():
    r5 = complex_zeros(5)
    r25 = complex_zeros(25)
    scaled5 = np.max(np.abs(r5.roots.imag)) / math.sqrt(11)
    scaled25 = np.max(np.abs(r25.roots.imag)) / math.sqrt(51)
    assert scaled25 < scaled5


@pytest.mark.parametrize("cap", [3, 12])
def test_zeros_are_poles_of_the_measure(cap):
    rs = complex_zeros(cap)
    for z in rs.roots:
        rows, exps = orthonormal_rows(np.array(z), cap)
        h = rows * np.ldexp(1.0, exps)
        value = kernel(z, z, cap).value
        assert abs(value) < 1e-9 * float(np.sum(np.abs(h) ** 2))


def test_root_set_serialisation():
    rs = complex_zeros(4)
    back = ComplexRootSet.from_json(rs.to_json())
    assert back.cap == 4 and np.array_equal(back.roots, rs.roots)
    lines = rs.to_csv().strip().splitlines()
    assert lines[0] == "re,im" and len(lines) == 9


def test_precision_override(monkeypatch):
    monkeypatch.setenv("QSPEC_PRECISION", "300")
    assert complex_zeros(6).precision_bits >= 300
    monkeypatch.setenv("QSPEC_PRECISION", "20")
    with pytest.raises(ValueError):
        complex_zeros(6)


def test_best_effort_flag_reports_instead_of_raising():
    rs = complex_zeros(8, precision_bits=53, tol=1e-300, best_effort=True)
    assert isinstance(rs.unconverged, tuple)
    with pytest.raises(ConvergenceError):
        complex_zeros(8, precision_bits=53, tol=1e-300)


def _laurent_oracle(cap, k):
    # d_N = (N+1)/2 h_{N+1}^2 / sum h_n^2, exact at a huge argument, peeled one power at a time
    x = Fraction(10 ** 40)

    def hsq(n):
        return hermite_exact(n, x) ** 2 / (2 ** n * math.factorial(n))

    rest = Fraction(cap + 1, 2) * hsq(cap + 1) / sum(hsq(n) for n in range(cap + 1))
    for j in range(k + 1):
        coeff = round(rest / x ** (2 - 2 * j) * 10 ** 15) / Fraction(10 ** 15)
        rest -= coeff * x ** (2 - 2 * j)
    return float(coeff)


@pytest.mark.parametrize("cap", [5, 15])
def test_laurent_coefficients(cap):
    rs = complex_zeros(cap)
    want = [1.0, -1.5 * cap, cap * (5 - cap) / 4.0]
    for k, w in enumerate(want):
        assert laurent_coefficient(cap, k, rs) == pytest.approx(w, rel=1e-9, abs=1e-12)
    for k in range(4):
        assert laurent_coefficient(cap, k, rs) == pytest.approx(_laurent_oracle(cap, k), rel=1e-8, abs=1e-9)
    with pytest.raises(ValueError):
        laurent_coefficient(cap, -1, rs)
    with pytest.raises(ValueError):
        laurent_coefficient(cap + 1, 0, rs)
