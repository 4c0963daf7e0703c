"""Overflow-safe Hermite polynomials, Hermite functions and Hermite roots.

Two families are used throughout the package:

* the physicists' polynomials ``H_n(x)`` (``H_{n+1} = 2x H_n - 2n H_{n-1}``),
  whose magnitudes reach ``2**n n!`` and are therefore carried as
  :class:`~fockquad.scaled.ScaledReal`;
* the orthonormal values ``h_n(x) = H_n(x) / sqrt(2**n n!)``, obeying
  ``h_{n+1} = (sqrt(2) x h_n - sqrt(n) h_{n-1}) / sqrt(n+1)``. These stay
  moderate and are what every physical quantity is computed from.

Vectorised helpers work on numpy arrays (real or complex) and rescale by
exact powers of two whenever a row grows past ``2**256``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import mpmath
import numpy as np
from scipy.linalg import LinAlgError, eigvalsh_tridiagonal

from .errors import ConvergenceError
from .scaled import ScaledReal

__all__ = [
    "HermiteSequence",
    "RootSet",
    "eval_hermite_sequence",
    "eval_hermite_function",
    "hermite_functions",
    "orthonormal_rows",
    "orthonormal_relative",
    "orthonormal_rows_with_derivative",
    "christoffel_numbers",
    "hermite_rows",
    "hermite_roots",
    "discrete_orthogonality_check",
]

_RESCALE_BITS = 256
_BIG = 2.0 ** _RESCALE_BITS
_SMALL = 2.0 ** -_RESCALE_BITS
SQRT2 = math.sqrt(2.0)
LN2 = math.log(2.0)
PI_M14 = math.pi ** -0.25


def _check_finite(x) -> np.ndarray:
    arr = np.asarray(x)
    if not np.all(np.isfinite(arr)):
        raise ValueError("evaluation point must be finite")
    if arr.dtype.kind not in "fc":
        arr = arr.astype(float)
    return arr


def orthonormal_rows(x, order: int):
    """Orthonormal Hermite values ``h_0(x) .. h_order(x)`` in scaled form.

    Returns ``(rows, exps)``, both of shape ``(order + 1,) + x.shape``, with
    ``h_n(x) = rows[n] * 2**exps[n]``.
    """
    if order < 0:
        raise ValueError("order must be >= 0")
    x = _check_finite(x)
    rows = np.empty((order + 1,) + x.shape, dtype=x.dtype)
    exps = np.zeros((order + 1,) + x.shape, dtype=np.int64)
    rows[0] = 1.0
    if order == 0:
        return rows, exps
    e = np.zeros(x.shape, dtype=np.int64)
    prev = np.zeros(x.shape, dtype=x.dtype)
    cur = np.ones(x.shape, dtype=x.dtype)
    sx = SQRT2 * x
    for n in range(order):
        nxt = (sx * cur - math.sqrt(n) * prev) / math.sqrt(n + 1)
        big = np.abs(nxt) > _BIG
        if np.any(big):
            nxt = np.where(big, nxt * _SMALL, nxt)
            cur = np.where(big, cur * _SMALL, cur)
            e = e + np.where(big, _RESCALE_BITS, 0)
        rows[n + 1] = nxt
        exps[n + 1] = e
        prev, cur = cur, nxt
    return rows, exps


def orthonormal_rows_with_derivative(x, order: int):
    """``h_n(x)`` and ``h_n'(x)`` from the differentiated recurrence.

    ``h'_{n+1} = (sqrt(2) (h_n + x h'_n) - sqrt(n) h'_{n-1}) / sqrt(n+1)``;
    deliberately does not use ``h_n' = sqrt(2n) h_{n-1}`` so that identity can
    be checked against it. Returns ``(rows, drows, exps)`` sharing one scale.
    """
    if order < 0:
        raise ValueError("order must be >= 0")
    x = _check_finite(x)
    rows = np.empty((order + 1,) + x.shape, dtype=x.dtype)
    drows = np.empty_like(rows)
    exps = np.zeros((order + 1,) + x.shape, dtype=np.int64)
    rows[0] = 1.0
    drows[0] = 0.0
    e = np.zeros(x.shape, dtype=np.int64)
    prev = np.zeros(x.shape, dtype=x.dtype)
    dprev = np.zeros(x.shape, dtype=x.dtype)
    cur = np.ones(x.shape, dtype=x.dtype)
    dcur = np.zeros(x.shape, dtype=x.dtype)
    for n in range(order):
        a, b = SQRT2 / math.sqrt(n + 1), math.sqrt(n / (n + 1))
        nxt = a * x * cur - b * prev
        dnxt = a * (cur + x * dcur) - b * dprev
        big = np.maximum(np.abs(nxt), np.abs(dnxt)) > _BIG
        if np.any(big):
            f = np.where(big, _SMALL, 1.0)
            nxt, dnxt, cur, dcur = nxt * f, dnxt * f, cur * f, dcur * f
            e = e + np.where(big, _RESCALE_BITS, 0)
        rows[n + 1] = nxt
        drows[n + 1] = dnxt
        exps[n + 1] = e
        prev, cur = cur, nxt
        dprev, dcur = dcur, dnxt
    return rows, drows, exps


def _ldexp(values, shifts):
    """``values * 2**shifts`` for real or complex arrays."""
    values = np.asarray(values)
    if values.dtype.kind == "c":
        return np.ldexp(values.real, shifts) + 1j * np.ldexp(values.imag, shifts)
    return np.ldexp(values, shifts)


def orthonormal_relative(x, order: int):
    """``h_n(x) / 2**E(x)`` for ``n = 0..order`` with one common exponent.

    ``E(x)`` is the scale of the last row. Rows far below it underflow to
    zero, which is harmless for the ratios built from them. Returns
    ``(values, E)``.
    """
    rows, exps = orthonormal_rows(x, order)
    top = exps[-1]
    return _ldexp(rows, exps - top), top


def hermite_rows(x, order: int):
    """Physicists' ``H_0(x) .. H_order(x)`` via the raw recurrence, scaled.

    Returns ``(rows, exps)`` with ``H_n(x) = rows[n] * 2**exps[n]``. This is
    a separate pipeline from :func:`orthonormal_rows`; the two are compared
    in the tests.
    """
    if order < 0:
        raise ValueError("order must be >= 0")
    x = _check_finite(x)
    rows = np.empty((order + 1,) + x.shape, dtype=x.dtype)
    exps = np.zeros((order + 1,) + x.shape, dtype=np.int64)
    rows[0] = 1.0
    if order == 0:
        return rows, exps
    e = np.zeros(x.shape, dtype=np.int64)
    prev = np.zeros(x.shape, dtype=x.dtype)
    cur = np.ones(x.shape, dtype=x.dtype)
    for n in range(order):
        nxt = 2.0 * x * cur - 2.0 * n * prev
        big = np.abs(nxt) > _BIG
        if np.any(big):
            nxt = np.where(big, nxt * _SMALL, nxt)
            cur = np.where(big, cur * _SMALL, cur)
            e = e + np.where(big, _RESCALE_BITS, 0)
        rows[n + 1] = nxt
        exps[n + 1] = e
        prev, cur = cur, nxt
    return rows, exps


@dataclass(frozen=True)
class HermiteSequence:
    """``H_0(x) .. H_N(x)`` (scaled) together with ``h_0(x) .. h_N(x)``."""

    x: float
    order: int
    values: tuple[ScaledReal, ...]
    normalized_values: tuple[float, ...]


def eval_hermite_sequence(x: float, order: int) -> HermiteSequence:
    """Evaluate the Hermite recurrence at ``x`` up to degree ``order``.

    ``normalized_values`` are plain floats and may overflow to ``inf`` for
    extreme arguments; ``values`` never do.
    """
    x = float(x)
    if not math.isfinite(x):
        raise ValueError("evaluation point must be finite")
    if order < 0:
        raise ValueError("order must be >= 0")
    H, He = hermite_rows(np.array(x), order)
    h, hE = orthonormal_rows(np.array(x), order)
    values = tuple(ScaledReal(float(H[n]), int(He[n])) for n in range(order + 1))
    with np.errstate(over="ignore"):
        normalized = tuple(float(v) for v in np.ldexp(h, hE))
    return HermiteSequence(x, order, values, normalized)


def hermite_functions(xi, order: int) -> np.ndarray:
    """``<xi|n>`` for ``n = 0..order``, shape ``(order + 1,) + xi.shape``.

    The Gaussian is folded into the power-of-two scale before it is applied,
    so no intermediate overflows or spuriously underflows.
    """
    xi = _check_finite(xi)
    rows, exps = orthonormal_rows(xi, order)
    logs = exps * LN2 - 0.5 * xi ** 2
    return PI_M14 * rows * np.exp(logs)


def eval_hermite_function(n: int, xi: float) -> float:
    """Harmonic-oscillator eigenfunction ``<xi|n>``."""
    if n < 0:
        raise ValueError("n must be >= 0")
    return float(hermite_functions(np.array(float(xi)), n)[n])


@dataclass(frozen=True)
class RootSet:
    degree: int
    roots: np.ndarray
    weights: np.ndarray | None = None


def _newton_ratio(x: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return ``h_n / h_n'``, ``|h_n|``, ``|h_n'|`` at ``x`` (common scale)."""
    vals, _ = orthonormal_relative(x, n)
    hn = vals[n]
    dn = math.sqrt(2.0 * n) * vals[n - 1]
    return hn / dn, np.abs(hn), np.abs(dn)


# -- double-double evaluation for the last Newton correction -----------------

_SPLIT = 134217729.0  # 2**27 + 1


def _two_sum(a, b):
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


def _split(a):
    c = _SPLIT * a
    hi = c - (c - a)
    return hi, a - hi


def _two_prod(a, b):
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    return p, ((ah * bh - p) + ah * bl + al * bh) + al * bl


def _dd_mul(ah, al, bh, bl):
    p, e = _two_prod(ah, bh)
    e = e + (ah * bl + al * bh)
    s = p + e
    return s, e - (s - p)


def _dd_sub(ah, al, bh, bl):
    s, e = _two_sum(ah, -bh)
    e = e + (al - bl)
    t = s + e
    return t, e - (t - s)


@lru_cache(maxsize=64)
def _dd_coefficients(n: int):
    """``sqrt(2/(k+1))`` and ``sqrt(k/(k+1))`` for ``k < n`` as (hi, lo) pairs."""
    with mpmath.workdps(40):
        a = [mpmath.sqrt(mpmath.mpf(2) / (k + 1)) for k in range(n)]
        b = [mpmath.sqrt(mpmath.mpf(k) / (k + 1)) for k in range(n)]
        out = []
        for seq in (a, b):
            hi = np.array([float(v) for v in seq])
            lo = np.array([float(v - mpmath.mpf(h)) for v, h in zip(seq, hi)])
            out.append((hi, lo))
    return out


def _dd_newton_step(x: np.ndarray, n: int) -> np.ndarray:
    """``h_n(x) / h_n'(x)`` with ``h_n`` carried in double-double arithmetic."""
    (ah, al), (bh, bl) = _dd_coefficients(n)
    ph, pl = np.zeros_like(x), np.zeros_like(x)
    ch, cl = np.ones_like(x), np.zeros_like(x)
    for k in range(n):
        th, tl = _dd_mul(ch, cl, ah[k], al[k])
        th, tl = _dd_mul(th, tl, x, 0.0)
        uh, ul = _dd_mul(ph, pl, bh[k], bl[k])
        ph, pl = ch, cl
        ch, cl = _dd_sub(th, tl, uh, ul)
        big = np.abs(ch) > 2.0 ** 400
        if np.any(big):
            # exact power-of-two rescaling keeps the splits in range
            f = np.where(big, 2.0 ** -400, 1.0)
            ph, pl, ch, cl = ph * f, pl * f, ch * f, cl * f
    return (ch + cl) / (math.sqrt(2.0 * n) * ph)


@lru_cache(maxsize=256)
def _roots_cached(degree: int) -> tuple[float, ...]:
    off = np.sqrt(np.arange(1, degree) / 2.0)
    try:
        # LAPACK sterf: implicit-shift QL/QR on the two diagonals, values only
        roots = eigvalsh_tridiagonal(np.zeros(degree), off, lapack_driver="sterf")
    except LinAlgError as exc:
        raise ConvergenceError(f"Jacobi eigensolver failed for degree {degree}: {exc}",
                               list(range(degree))) from exc
    # the zeros are symmetric: polish the non-negative half and mirror it,
    # so that 0 is exact for odd degree and roots[i] == -roots[-1-i]
    roots = np.sort(roots)
    half = np.abs(roots[degree // 2:])
    if degree % 2:
        half[0] = 0.0
    if degree > 1:
        for _ in range(3):
            step, _, _ = _newton_ratio(half, degree)
            if degree % 2:
                step[0] = 0.0
            half = half - step
            if np.max(np.abs(step)) < 1e-15 * max(1.0, float(np.max(half))):
                break
        # final correction with h_n accurate beyond double precision
        step = _dd_newton_step(half, degree)
        if degree % 2:
            step[0] = 0.0
        half = half - step
    tail = half[1:] if degree % 2 else half
    roots = np.concatenate((-tail[::-1], half))
    _, hn, dn = _newton_ratio(roots, degree) if degree > 1 else (None, np.abs(roots), np.ones(1))
    # residual check on the common scale: |h_n| relative to |h_n'|
    bad = np.nonzero(hn >= 1e-12 * np.maximum(1.0, dn))[0]
    if bad.size:
        raise ConvergenceError(f"Hermite root polish failed for degree {degree}", bad)
    if degree > 1:
        gaps = np.diff(roots)
        floor = 0.5 * math.pi / (2.0 * math.sqrt(2 * degree + 1))
        if gaps.min() <= floor:
            idx = int(np.argmin(gaps))
            raise ConvergenceError(
                f"root separation {gaps.min():.3g} below {floor:.3g} for degree {degree}",
                [idx, idx + 1])
    return tuple(float(r) for r in roots)


def hermite_roots(degree: int, want_weights: bool = False) -> RootSet:
    """Zeros of ``H_degree`` and optionally the Gauss-Hermite weights.

    The zeros are eigenvalues of the Jacobi matrix (the truncated position
    quadrature of size ``degree``), refined by Newton steps using
    ``h_n' = sqrt(2n) h_{n-1}``. Weights are ``sqrt(pi) * v_0**2`` where
    ``v`` is the unit eigenvector at the node; since ``v`` is proportional
    to ``(h_0, .., h_{n-1})``, this is ``sqrt(pi) / sum_k h_k(x)**2``.
    """
    if degree < 1:
        raise ValueError("degree must be >= 1")
    roots = np.array(_roots_cached(int(degree)))
    weights = None
    if want_weights:
        vals, top = orthonormal_relative(roots, degree - 1)
        ksum = np.sum(vals ** 2, axis=0)
        weights = math.sqrt(math.pi) / ksum * np.ldexp(1.0, -2 * top)
    return RootSet(int(degree), roots, weights)


def christoffel_numbers(roots: np.ndarray, cap: int) -> np.ndarray:
    """``1 / sum_{n<=cap} h_n(x)**2`` at each point (``|c_N(x)|**2``)."""
    vals, top = orthonormal_relative(roots, cap)
    return np.ldexp(1.0 / np.sum(vals ** 2, axis=0), -2 * top)


def discrete_orthogonality_check(m: int, n: int, cap: int) -> float:
    """``sum_k |c_N(l_k)|**2 h_m(l_k) h_n(l_k)`` over the zeros of ``H_{N+1}``.

    Should reproduce Kronecker's delta for ``0 <= m, n <= N``.
    """
    if not (0 <= m <= cap and 0 <= n <= cap):
        raise ValueError("m and n must lie in 0..cap")
    roots = hermite_roots(cap + 1).roots
    vals, _ = orthonormal_relative(roots, cap)
    weights = 1.0 / np.sum(vals ** 2, axis=0)
    return float(math.fsum(weights * vals[m] * vals[n]))
