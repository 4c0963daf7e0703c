"""Approximate eigenstates ``|l>_N`` of the truncated position quadrature.

For any real ``l`` the vector with components ``c_N(l) h_n(l)`` fails to be
an eigenvector only in its last component. Everything here is written in the
orthonormal variables ``h_n``; with ``K = sum_{n<=N} h_n(l)**2``::

    d_N(l)       = (N+1) h_{N+1}**2 / (2K)
    <xi>         = l - sqrt((N+1)/2) h_{N+1} h_N / K
    (dxi_N)**2   = d_N (1 - h_N**2 / K)
    (dxi)**2     = (dxi_N)**2 + (N+1)/2 * h_N**2 / K

Functions accept scalars or numpy arrays for ``lam`` and return the same
shape.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import mpmath
import numpy as np

from .hermite import LN2, PI_M14, _ldexp, hermite_rows, orthonormal_relative
from .io import csv_text
from .cdkernel import kernel_scaled
from .quadrature import build

__all__ = [
    "NormalizationMode",
    "PseudoEigenstate",
    "MomentReport",
    "Approximation",
    "build_state",
    "d_measure",
    "d_measure_ratio",
    "d_measure_logform",
    "d_approx_quadratic",
    "d_approx_oscillatory",
    "expectation_xi",
    "expectation_approx",
    "variance_truncated",
    "variance_truncated_approx",
    "variance_full",
    "variance_full_approx",
    "moments",
    "moment_profile_csv",
    "wavefunction",
    "inner_product",
    "matrix_element_xi",
    "special_state_residual",
    "POLE_THRESHOLD",
]

POLE_THRESHOLD = 1e-3
SWITCHOVER = 1e-8


class NormalizationMode(enum.Enum):
    UNIT_NORM = "unit"
    TRUNCATED_POSITION_KET = "truncated-position-ket"


class Approximation(NamedTuple):
    value: float | np.ndarray
    pole_flag: bool | np.ndarray


def _out(x):
    x = np.asarray(x)
    return float(x) if x.ndim == 0 else x


def _flag(x):
    x = np.asarray(x, bool)
    return bool(x) if x.ndim == 0 else x


NEAR_ROOT = 1e-3


def _tail_mp(x: float, cap: int, dps: int = 40):
    with mpmath.workdps(dps):
        t = mpmath.mpf(x)
        s2 = mpmath.sqrt(2)
        h = [mpmath.mpf(1), s2 * t]
        for n in range(1, cap + 1):
            h.append((s2 * t * h[n] - mpmath.sqrt(n) * h[n - 1]) / mpmath.sqrt(n + 1))
        k = mpmath.fsum(v * v for v in h[: cap + 1])
        scale = mpmath.sqrt(k)
        prev = h[cap - 1] / scale if cap >= 1 else mpmath.mpf(0)
        return float(prev), float(h[cap] / scale), float(h[cap + 1] / scale), 1.0


def _tail(lam, cap):
    """``h_{N-1}, h_N, h_{N+1}`` and ``K`` on a common (cancelling) scale.

    Close to a zero of ``H_{N+1}`` the forward recurrence leaves ``h_{N+1}``
    with a relative error of about ``eps / r``, where ``r`` is its size
    relative to the whole vector. Points with ``r < NEAR_ROOT`` are redone in
    40-digit arithmetic so that ``d_N`` keeps its relative accuracy there.
    """
    lam = np.asarray(lam, float)
    vals, _ = orthonormal_relative(lam, cap + 1)
    k = np.sum(vals[: cap + 1] ** 2, axis=0)
    prev = vals[cap - 1] if cap >= 1 else np.zeros_like(k)
    hn, hn1 = vals[cap], vals[cap + 1]
    near = np.abs(hn1) < NEAR_ROOT * np.sqrt(k)
    if np.any(near):
        prev, hn, hn1, k = (np.array(a, float, copy=True) for a in (prev, hn, hn1, k))
        for idx in zip(*np.nonzero(np.atleast_1d(near))):
            x = float(np.atleast_1d(lam)[idx])
            out = _tail_mp(x, cap)
            for arr, v in zip((prev, hn, hn1, k), out):
                np.atleast_1d(arr)[idx] = v
    return prev, hn, hn1, k


@dataclass(frozen=True)
class PseudoEigenstate:
    lam: float
    cap: int
    mode: NormalizationMode
    coeffs: np.ndarray

    def norm_squared(self) -> float:
        return float(math.fsum(self.coeffs ** 2))

    def residual(self) -> np.ndarray:
        """``(xi_N - lam)|lam>_N`` computed with the matrix."""
        return build(self.cap).matvec(self.coeffs) - self.lam * self.coeffs

    def residual_scalar(self) -> float:
        """Predicted last component ``-sqrt((N+1)/2) c_N h_{N+1}(lam)``."""
        n = self.cap
        full = build_state(self.lam, n + 1, self.mode).coeffs
        # same c_N for both caps in the position-ket normalisation; rescale otherwise
        if self.mode is NormalizationMode.UNIT_NORM:
            full = full * math.sqrt(1.0 / max(1.0 - full[n + 1] ** 2, 1e-300))
        return float(-math.sqrt((n + 1) / 2.0) * full[n + 1])


def build_state(lam: float, cap: int,
                mode: NormalizationMode = NormalizationMode.UNIT_NORM) -> PseudoEigenstate:
    """``|lam>_N`` with components ``c_N(lam) h_n(lam)``."""
    if cap < 0:
        raise ValueError("cap must be >= 0")
    lam = float(lam)
    if not math.isfinite(lam):
        raise ValueError("lam must be finite")
    vals, top = orthonormal_relative(np.array(lam), cap)
    if mode is NormalizationMode.UNIT_NORM:
        coeffs = vals / math.sqrt(float(np.sum(vals ** 2)))
    else:
        coeffs = vals * PI_M14 * math.exp(float(top) * LN2 - 0.5 * lam ** 2)
    return PseudoEigenstate(lam, int(cap), mode, np.asarray(coeffs, float))


# -- exactness measure --------------------------------------------------------

def d_measure(lam, cap: int):
    """``d_N(lam) = ||(xi_N - lam)|lam>_N||**2`` for the unit-norm state."""
    _, hn, hn1, k = _tail(lam, cap)
    return _out((cap + 1) * hn1 ** 2 / (2.0 * k))


def d_measure_ratio(lam, cap: int):
    """``H_{N+1}**2 / (4 ((N+1) H_N**2 - N H_{N+1} H_{N-1}))`` from raw ``H_n``."""
    rows, exps = hermite_rows(np.asarray(lam, float), cap + 1)
    top = exps[cap + 1]
    a1 = rows[cap + 1]
    a0 = _ldexp(rows[cap], exps[cap] - top)
    am = _ldexp(rows[cap - 1], exps[cap - 1] - top) if cap >= 1 else np.zeros_like(a0)
    return _out(a1 ** 2 / (4.0 * ((cap + 1) * a0 ** 2 - cap * a1 * am)))


def d_measure_logform(lam, cap: int, warn_at: float = 1e-6, fail_at: float = 1e-12):
    """``-(N+1) / (d^2/dl^2 ln|H_{N+1}(l)|)`` with analytic derivatives.

    Uses ``H' = 2(N+1) H_N`` and ``H'' = 4(N+1)N H_{N-1}``. Raises
    ``ValueError`` on (numerical) zeros of ``H_{N+1}`` and warns when
    ``|h_{N+1}| / sqrt(K)`` drops below ``warn_at``.
    """
    lam_arr = np.asarray(lam, float)
    hm, hn, hn1, k = _tail(lam_arr, cap)
    closeness = np.abs(hn1) / np.sqrt(k)
    if np.any(closeness <= fail_at):
        raise ValueError("lam is a zero of H_{N+1}; ln|H_{N+1}| is singular there")
    if np.any(closeness < warn_at):
        warnings.warn("lam is close to a zero of H_{N+1}; log form is ill-conditioned",
                      RuntimeWarning, stacklevel=2)
    n = cap
    # ratios H_N/H_{N+1} and H_{N-1}/H_{N+1} in orthonormal variables
    u = hn / (hn1 * math.sqrt(2.0 * (n + 1)))
    v = hm / (hn1 * math.sqrt(4.0 * n * (n + 1))) if n >= 1 else np.zeros_like(u)
    d2 = 4.0 * (n + 1) * n * v - 4.0 * (n + 1) ** 2 * u ** 2
    return _out(-(n + 1) / d2)


def _domain_mask(lam, cap):
    return np.abs(np.asarray(lam, float)) > math.sqrt(2 * cap + 1)


def d_approx_quadratic(lam, cap: int, terms: int = 3):
    """``l**2 - 3N/2 + N(5-N)/(4 l**2)``, truncated to ``terms`` terms.

    Valid for ``|l| > sqrt(2N+1)``; accuracy just past the boundary is not
    guaranteed.
    """
    if not 1 <= terms <= 3:
        raise ValueError("terms must be 1, 2 or 3")
    lam = np.asarray(lam, float)
    if not np.all(_domain_mask(lam, cap)):
        raise ValueError("quadratic approximant needs |lam| > sqrt(2N+1)")
    n = cap
    coefs = [1.0, -1.5 * n, n * (5.0 - n) / 4.0]
    out = sum(c * lam ** (2 - 2 * j) for j, c in enumerate(coefs[:terms]))
    return _out(out)


def _osc_denominator(lam, cap):
    b = 2 * cap + 1
    return 1.0 + np.cos(2.0 / math.sqrt(b) * lam * (1.0 + lam ** 2 / (12.0 * b)))


def _check_osc(lam, cap):
    lam = np.asarray(lam, float)
    if np.any(_domain_mask(lam, cap)) or np.any(np.abs(lam) == math.sqrt(2 * cap + 1)):
        raise ValueError("oscillatory approximant needs |lam| < sqrt(2N+1)")
    return lam


def d_approx_oscillatory(lam, cap: int) -> Approximation:
    """Uniform-in-bounded-``lam`` approximant with the phase series truncated.

    The pole flag marks ``|1 + cos(.)| < 1e-3`` in the denominator.
    """
    lam = _check_osc(lam, cap)
    a = 2 * cap + 3
    num = 1.0 + (-1) ** (cap + 1) * np.cos(
        2.0 * math.sqrt(a) * lam * (1.0 - lam ** 2 / (6.0 * a)))
    den = _osc_denominator(lam, cap)
    return Approximation(_out(0.5 * num / den), _flag(np.abs(den) < POLE_THRESHOLD))


# -- moments ------------------------------------------------------------------

def _require_cap(cap):
    if cap < 1:
        raise ValueError("cap must be >= 1")


def expectation_xi(lam, cap: int):
    """``<lam|xi_N|lam>`` (equal to ``<lam|xi|lam>``)."""
    _require_cap(cap)
    lam = np.asarray(lam, float)
    _, hn, hn1, k = _tail(lam, cap)
    return _out(lam - math.sqrt((cap + 1) / 2.0) * hn1 * hn / k)


def expectation_approx(lam, cap: int, regime: str, printed: bool = True) -> Approximation:
    """Large-``lam`` series or oscillatory approximant of ``<xi>``.

    ``printed=True`` evaluates the oscillatory form exactly as published,
    with ``(1 + l**2/(6(2N+2)))`` in the fast phase. ``printed=False`` uses
    ``(1 - l**2/(6(2N+2)))`` there, matching the phase series of the other
    oscillatory approximants; it tracks the exact value much more closely.
    """
    lam = np.asarray(lam, float)
    n = cap
    if regime == "quadratic":
        if not np.all(_domain_mask(lam, cap)):
            raise ValueError("quadratic regime needs |lam| > sqrt(2N+1)")
        value = n / lam + n * (n - 2.0) / (2.0 * lam ** 3)
        return Approximation(_out(value), _flag(np.zeros(lam.shape, bool)))
    if regime != "oscillatory":
        raise ValueError("regime must be 'quadratic' or 'oscillatory'")
    lam = _check_osc(lam, cap)
    c = 2 * n + 2
    b = 2 * n + 1
    slow = np.sin(lam / math.sqrt(c) * (1.0 + lam ** 2 / (6.0 * c)))
    sign = 1.0 if printed else -1.0
    fast = np.sin(2.0 * math.sqrt(c) * lam * (1.0 + sign * lam ** 2 / (6.0 * c)))
    den = _osc_denominator(lam, cap)
    value = lam - (slow + (-1) ** n * fast) / (math.sqrt(b) * den)
    return Approximation(_out(value), _flag(np.abs(den) < POLE_THRESHOLD))


def variance_truncated(lam, cap: int):
    """``(Delta xi_N)**2 = d_N (1 - h_N**2/K)``."""
    _require_cap(cap)
    _, hn, hn1, k = _tail(lam, cap)
    d = (cap + 1) * hn1 ** 2 / (2.0 * k)
    return _out(d * (1.0 - hn ** 2 / k))


def variance_truncated_approx(lam, cap: int, regime: str) -> Approximation:
    """``N/2 - N(N+3)/(4 l**2)`` outside, ``d_N(l)`` inside the zero region."""
    lam = np.asarray(lam, float)
    if regime == "quadratic":
        if not np.all(_domain_mask(lam, cap)):
            raise ValueError("quadratic regime needs |lam| > sqrt(2N+1)")
        value = cap / 2.0 - cap * (cap + 3.0) / (4.0 * lam ** 2)
        return Approximation(_out(value), _flag(np.zeros(lam.shape, bool)))
    if regime != "oscillatory":
        raise ValueError("regime must be 'quadratic' or 'oscillatory'")
    lam = _check_osc(lam, cap)
    return Approximation(d_measure(lam, cap), _flag(np.zeros(lam.shape, bool)))


def variance_full(lam, cap: int):
    """Dispersion of the untruncated position in ``|lam>_N``."""
    _require_cap(cap)
    _, hn, hn1, k = _tail(lam, cap)
    q = hn ** 2 / k
    d = (cap + 1) * hn1 ** 2 / (2.0 * k)
    return _out(d * (1.0 - q) + 0.5 * (cap + 1) * q)


def variance_full_approx(lam, cap: int, regime: str) -> Approximation:
    lam = np.asarray(lam, float)
    n = cap
    if regime == "quadratic":
        if not np.all(_domain_mask(lam, cap)):
            raise ValueError("quadratic regime needs |lam| > sqrt(2N+1)")
        value = ((2 * n + 1) / 2.0 - n * (n + 2.0) / (2.0 * lam ** 2)
                 - n * (2.0 * n * n + 2 * n - 9) / (4.0 * lam ** 4))
        return Approximation(_out(value), _flag(np.zeros(lam.shape, bool)))
    if regime != "oscillatory":
        raise ValueError("regime must be 'quadratic' or 'oscillatory'")
    lam = _check_osc(lam, cap)
    c = 2 * n + 2
    fast = np.sin(2.0 * math.sqrt(c) * lam * (1.0 - lam ** 2 / (6.0 * c)))
    slow = np.sin(lam / math.sqrt(c) * (1.0 + lam ** 2 / (6.0 * c)))
    den = _osc_denominator(lam, cap)
    return Approximation(_out((1.0 + (-1) ** n * fast * slow) / den),
                         _flag(np.abs(den) < POLE_THRESHOLD))


MOMENT_HEADER = ("lambda", "d", "expectation", "var_truncated", "var_full", "flags")


@dataclass(frozen=True)
class MomentReport:
    lam: float
    cap: int
    expectation: float
    d_value: float
    var_truncated: float
    var_full: float
    flags: str = ""

    def row(self) -> tuple:
        return (self.lam, self.d_value, self.expectation, self.var_truncated,
                self.var_full, self.flags)


def _moment_flags(lam, cap, d):
    flags = []
    if d < 1e-12:
        flags.append("eigenvalue")
    if abs(lam) > math.sqrt(2 * cap + 1):
        flags.append("outside")
    elif abs(float(_osc_denominator(np.array(lam), cap))) < POLE_THRESHOLD:
        flags.append("pole")
    return ";".join(flags)


def moments(lam: float, cap: int) -> MomentReport:
    """All four moments at one point. Flags: ``eigenvalue`` (``d < 1e-12``),
    ``outside`` (``|lam| > sqrt(2N+1)``), ``pole`` (oscillatory approximants
    near a denominator zero)."""
    d = d_measure(lam, cap)
    return MomentReport(float(lam), cap, expectation_xi(lam, cap), d,
                        variance_truncated(lam, cap), variance_full(lam, cap),
                        _moment_flags(float(lam), cap, d))


def moment_profile_csv(lams, cap: int) -> str:
    return csv_text(MOMENT_HEADER, (moments(float(x), cap).row() for x in lams))


# -- wavefunctions and overlaps -----------------------------------------------

def wavefunction(xi, lam: float, cap: int):
    """``<xi|lam>_N`` for the unit-norm state with ``c_N > 0``.

    Christoffel-Darboux quotient in ``xi`` and ``lam``, with the confluent
    form when ``|xi - lam| < 1e-8 (1 + |lam|)``.
    """
    xi = np.asarray(xi, float)
    lam_arr = np.full(xi.shape, float(lam))
    m, e, _ = kernel_scaled(lam_arr, xi, cap)
    km, ke, _ = kernel_scaled(np.array(float(lam)), np.array(float(lam)), cap)
    logs = (e - 0.5 * ke) * LN2 - 0.5 * xi ** 2
    return _out(PI_M14 * m / math.sqrt(float(km)) * np.exp(logs))


def _pair(lam, lam_prime, cap):
    lam = np.asarray(lam, float)
    lam_prime = np.asarray(lam_prime, float)
    lam, lam_prime = np.broadcast_arrays(lam, lam_prime)
    a, _ = orthonormal_relative(lam, cap + 1)
    b, _ = orthonormal_relative(lam_prime, cap + 1)
    ka = np.sum(a[: cap + 1] ** 2, axis=0)
    kb = np.sum(b[: cap + 1] ** 2, axis=0)
    return lam, lam_prime, a, b, ka, kb


def inner_product(lam, lam_prime, cap: int):
    """``<lam'|lam>_N`` of two unit-norm pseudo-eigenstates."""
    lam, lam_prime, a, b, ka, kb = _pair(lam, lam_prime, cap)
    n = cap
    near = np.abs(lam - lam_prime) < SWITCHOVER * (1.0 + np.abs(lam))
    with np.errstate(divide="ignore", invalid="ignore"):
        quot = math.sqrt((n + 1) / 2.0) * (a[n + 1] * b[n] - a[n] * b[n + 1]) / (lam - lam_prime)
    value = np.where(near, 1.0, quot / np.sqrt(ka * kb))
    return _out(value)


def matrix_element_xi(lam_prime, lam, cap: int):
    """``<lam'|xi|lam>_N``; tends to :func:`expectation_xi` as ``lam' -> lam``."""
    lam, lam_prime, a, b, ka, kb = _pair(lam, lam_prime, cap)
    n = cap
    near = np.abs(lam - lam_prime) < SWITCHOVER * (1.0 + np.abs(lam))
    with np.errstate(divide="ignore", invalid="ignore"):
        quot = math.sqrt((n + 1) / 2.0) * (
            lam_prime * a[n + 1] * b[n] - lam * a[n] * b[n + 1]) / (lam - lam_prime)
    value = quot / np.sqrt(ka * kb)
    if np.any(near):
        conf = lam - math.sqrt((n + 1) / 2.0) * a[n + 1] * a[n] / ka
        value = np.where(near, conf, value)
    return _out(value)


def special_state_residual(cap: int, lam: float) -> float:
    """``||(xi_N - lam)|N>||**2`` from the matrix; equals ``lam**2 + N/2``."""
    q = build(cap)
    e_last = np.zeros(cap + 1)
    e_last[cap] = 1.0
    r = q.matvec(e_last) - lam * e_last
    return float(math.fsum(r ** 2))
