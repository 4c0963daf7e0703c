"""Christoffel-Darboux kernel of the Hermite polynomials and its complex zeros.

In orthonormal variables the kernel is ``K_N(l, m) = sum_{n<=N} h_n(l) h_n(m)``
and has the closed forms::

    K_N(l, m) = sqrt((N+1)/2) (h_{N+1}(l) h_N(m) - h_N(l) h_{N+1}(m)) / (l - m)
    K_N(l, l) = sqrt((N+1)/2) (h_N h'_{N+1} - h_{N+1} h'_N)          (derivative)
              = (N+1) h_N**2 - sqrt(N (N+1)) h_{N+1} h_{N-1}           (algebraic)

``P_N(l) = 2**N N! K_N(l, l)`` has integer coefficients; its 2N complex zeros
are the poles of the analytically continued exactness measure.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Literal

import mpmath
import numpy as np

from .errors import ConvergenceError
from .hermite import (
    _ldexp,
    hermite_roots,
    orthonormal_relative,
    orthonormal_rows,
    orthonormal_rows_with_derivative,
)

__all__ = [
    "KernelEvaluation",
    "ComplexRootSet",
    "ZeroStructure",
    "kernel",
    "kernel_scaled",
    "hermite_int_coefficients",
    "kernel_poly_coefficients",
    "complex_zeros",
    "zero_structure_report",
    "laurent_coefficient",
]

Form = Literal["auto", "bivariate", "confluent-derivative", "confluent-algebraic"]

SWITCHOVER = 1e-8
MAX_EXACT_CAP = 200


@dataclass(frozen=True)
class KernelEvaluation:
    cap: int
    lam: complex
    mu: complex
    value: complex
    form_used: str


def _rows_relative(x, order):
    rows, exps = orthonormal_rows(x, order)
    top = exps[-1]
    return _ldexp(rows, exps - top), top


def _bivariate(a, b, cap):
    n = cap
    return math.sqrt((n + 1) / 2.0) * (a[n + 1] * b[n] - a[n] * b[n + 1])


def _confluent_algebraic(a, cap):
    n = cap
    if n == 0:
        return a[0] ** 2
    return (n + 1) * a[n] ** 2 - math.sqrt(n * (n + 1.0)) * a[n + 1] * a[n - 1]


def kernel_scaled(lam, mu, cap: int, form: Form = "auto"):
    """Vectorised kernel returning ``(mantissa, exponent, form_mask)``.

    ``K_N(lam, mu) = mantissa * 2**exponent``. ``form_mask`` is True where a
    confluent form was used.
    """
    if cap < 0:
        raise ValueError("cap must be >= 0")
    lam, mu = np.broadcast_arrays(np.asarray(lam), np.asarray(mu))
    dtype = np.result_type(lam.dtype, mu.dtype, float)
    lam = lam.astype(dtype)
    mu = mu.astype(dtype)
    if form == "bivariate":
        near = np.zeros(lam.shape, dtype=bool)
    elif form == "auto":
        near = np.abs(lam - mu) < SWITCHOVER * (1.0 + np.abs(lam))
    else:
        near = np.ones(lam.shape, dtype=bool)

    out = np.zeros(lam.shape, dtype=dtype)
    exp = np.zeros(lam.shape, dtype=np.int64)
    far = ~near
    if np.any(far):
        a, ea = _rows_relative(lam[far], cap + 1)
        b, eb = _rows_relative(mu[far], cap + 1)
        out[far] = _bivariate(a, b, cap) / (lam[far] - mu[far])
        exp[far] = ea + eb
    if np.any(near):
        mid = 0.5 * (lam[near] + mu[near])
        if form == "confluent-derivative":
            rows, drows, exps = orthonormal_rows_with_derivative(mid, cap + 1)
            top = exps[-1]
            a = _ldexp(rows, exps - top)
            da = _ldexp(drows, exps - top)
            n = cap
            out[near] = math.sqrt((n + 1) / 2.0) * (a[n] * da[n + 1] - a[n + 1] * da[n])
        else:
            a, top = _rows_relative(mid, cap + 1)
            out[near] = _confluent_algebraic(a, cap)
        exp[near] = 2 * top
    return out, exp, near


def kernel(lam, mu, cap: int, form: Form = "auto") -> KernelEvaluation:
    """Evaluate ``K_N(lam, mu)``; complex arguments are allowed.

    ``form="auto"`` uses the bivariate quotient unless
    ``|lam - mu| < 1e-8 (1 + |lam|)``, where the algebraic confluent form at
    the midpoint takes over.
    """
    m, e, near = kernel_scaled(lam, mu, cap, form)
    with np.errstate(over="ignore"):
        value = _ldexp(m, e)[()]
    if form == "auto":
        used = "confluent-algebraic" if bool(near) else "bivariate"
    else:
        used = form
    value = complex(value) if np.iscomplexobj(value) else float(value)
    return KernelEvaluation(int(cap), lam, mu, value, used)


# -- exact coefficients -------------------------------------------------------

@lru_cache(maxsize=None)
def hermite_int_coefficients(n: int) -> tuple[int, ...]:
    """Integer coefficients of ``H_n`` in ascending powers."""
    if n == 0:
        return (1,)
    if n == 1:
        return (0, 2)
    p1 = hermite_int_coefficients(n - 1)
    p2 = hermite_int_coefficients(n - 2)
    out = [0] * (n + 1)
    for k, c in enumerate(p1):
        out[k + 1] += 2 * c
    for k, c in enumerate(p2):
        out[k] -= 2 * (n - 1) * c
    return tuple(out)


def _polymul(p, q):
    return np.convolve(np.array(p, dtype=object), np.array(q, dtype=object)).tolist()


@lru_cache(maxsize=64)
def _kernel_coefficients(cap: int) -> tuple[int, ...]:
    if cap == 0:
        return (1,)
    hn = hermite_int_coefficients(cap)
    a = _polymul(hn, hn)
    b = _polymul(hermite_int_coefficients(cap + 1), hermite_int_coefficients(cap - 1))
    out = [(cap + 1) * a[k] - cap * b[k] for k in range(2 * cap + 1)]
    return tuple(int(c) for c in out)


def kernel_poly_coefficients(cap: int) -> list[int]:
    """Exact coefficients (ascending) of ``P_N = 2**N N! sum_n H_n**2 / (2**n n!)``.

    Built as ``(N+1) H_N**2 - N H_{N+1} H_{N-1}`` by integer convolution.
    The polynomial is even of degree ``2N``.
    """
    if cap < 0:
        raise ValueError("cap must be >= 0")
    if cap > MAX_EXACT_CAP:
        raise ValueError(f"exact kernel coefficients limited to cap <= {MAX_EXACT_CAP}")
    return list(_kernel_coefficients(cap))


# -- complex zeros ------------------------------------------------------------

@dataclass(frozen=True)
class ComplexRootSet:
    """The ``2N`` zeros of the diagonal kernel polynomial ``P_N``.

    ``residuals[j] = |P(z_j)| / (|P'(z_j)| (1 + |z_j|))`` evaluated with the
    exact coefficients at ``precision_bits``.
    """

    cap: int
    roots: np.ndarray
    max_residual: float
    residuals: np.ndarray
    precision_bits: int
    unconverged: tuple[int, ...] = ()
    mp_roots: tuple = field(default=(), repr=False, compare=False)

    @property
    def converged(self) -> bool:
        return not self.unconverged

    def to_json(self) -> str:
        from .io import fmt_float
        roots = ", ".join(f"[{fmt_float(z.real)}, {fmt_float(z.imag)}]" for z in self.roots)
        return (f'{{"cap": {self.cap}, "roots": [{roots}], '
                f'"max_residual": {fmt_float(self.max_residual)}}}')

    @classmethod
    def from_json(cls, text: str) -> ComplexRootSet:
        data = json.loads(text)
        roots = np.array([complex(re, im) for re, im in data["roots"]])
        return cls(int(data["cap"]), roots, float(data["max_residual"]),
                   np.full(len(roots), np.nan), 53)

    def to_csv(self) -> str:
        from .io import fmt_float
        lines = ["re,im"]
        lines += [f"{fmt_float(z.real)},{fmt_float(z.imag)}" for z in self.roots]
        return "\n".join(lines) + "\n"


def _initial_guesses(cap: int, scale: float = 0.8) -> np.ndarray:
    # abscissae from the zeros of H_N, height ~ (2N+1)**(-1/6)
    if cap == 1:
        xs = np.array([0.0])
    else:
        xs = hermite_roots(cap).roots
    height = scale * (2 * cap + 1) ** (-1.0 / 6.0)
    upper = xs + 1j * height
    return np.concatenate([upper, np.conj(upper)])


def _float_ratio(z: np.ndarray, cap: int):
    vals, top = orthonormal_relative(z, cap)
    k = np.sum(vals ** 2, axis=0)
    n = np.arange(1, cap + 1).reshape((-1,) + (1,) * z.ndim)
    dk = 2.0 * np.sum(vals[1:] * np.sqrt(2.0 * n) * vals[:-1], axis=0)
    return k / dk, dk, top


def _aberth_float(z: np.ndarray, cap: int, max_iter: int = 500, tol: float = 1e-14):
    z = z.copy()
    for _ in range(max_iter):
        ratio, _, _ = _float_ratio(z, cap)
        diff = z[:, None] - z[None, :]
        np.fill_diagonal(diff, 1.0)
        inv = 1.0 / diff
        np.fill_diagonal(inv, 0.0)
        w = ratio / (1.0 - ratio * inv.sum(axis=1))
        z = z - w
        if np.max(np.abs(w) / (1.0 + np.abs(z))) < tol:
            break
    return z


def _log2_abs_int(c: int) -> float:
    if c == 0:
        return -math.inf
    return math.log2(abs(c))


def _auto_bits(z: np.ndarray, cap: int, coeffs) -> int:
    # bits ~ log2( sum |a_k||z|^k / |P'(z)| ) + margin
    logs_a = np.array([_log2_abs_int(c) for c in coeffs])
    mask = np.isfinite(logs_a)
    ks = np.arange(len(coeffs))[mask]
    la = logs_a[mask]
    absz = np.maximum(np.abs(z), 1e-300)
    lterms = la[None, :] + ks[None, :] * np.log2(absz)[:, None]
    lsum = np.logaddexp2.reduce(lterms, axis=1)
    _, dk, top = _float_ratio(z, cap)
    lfact = cap + math.lgamma(cap + 1) / math.log(2.0)
    ldp = lfact + np.log2(np.maximum(np.abs(dk), 1e-300)) + 2 * top
    need = float(np.max(lsum - ldp))
    return int(max(113, math.ceil(need) + 96))


def _horner_even(q, u):
    """``Q(u)`` and ``Q'(u)`` for mp coefficient list ``q`` (ascending)."""
    p = mpmath.mpc(0)
    dp = mpmath.mpc(0)
    for c in reversed(q):
        dp = dp * u + p
        p = p * u + c
    return p, dp


def _p_and_dp(q, z):
    u = z * z
    qv, dq = _horner_even(q, u)
    return qv, 2 * z * dq


def _mp_aberth(q, zs, sweeps: int):
    zs = list(zs)
    n = len(zs)
    for _ in range(sweeps):
        ratios = []
        for z in zs:
            p, dp = _p_and_dp(q, z)
            ratios.append(p / dp)
        new = []
        for j in range(n):
            zj = zs[j]
            s = mpmath.fsum(1 / (zj - zs[k]) for k in range(n) if k != j)
            r = ratios[j]
            new.append(zj - r / (1 - r * s))
        zs = new
    return zs


def _residuals(q, zs):
    res = []
    for z in zs:
        p, dp = _p_and_dp(q, z)
        res.append(float(abs(p) / (abs(dp) * (1 + abs(z)))))
    return np.array(res)


def _precision_override() -> int | None:
    raw = os.environ.get("QSPEC_PRECISION")
    if not raw:
        return None
    bits = int(raw)
    if bits < 53:
        raise ValueError("QSPEC_PRECISION must be at least 53 bits")
    return bits


def complex_zeros(cap: int, best_effort: bool = False, precision_bits: int | None = None,
                  tol: float = 1e-9) -> ComplexRootSet:
    """All ``2N`` zeros of ``P_N`` by Aberth-Ehrlich iteration.

    The iteration first runs in complex double precision with the kernel
    evaluated by the orthonormal recurrence, starting from two arcs above and
    below the real axis. The estimates are then refined by Aberth sweeps on the
    exact integer polynomial, evaluated by Horner in ``mpmath`` at a precision
    derived from the monomial-basis condition number (or ``QSPEC_PRECISION``
    bits, or ``precision_bits``), escalating if the residual target is missed.

    Raises :class:`ConvergenceError` listing unconverged indices, unless
    ``best_effort`` is set, in which case they are reported on the result.
    """
    if cap < 1:
        raise ValueError("cap must be >= 1")
    coeffs = _kernel_coefficients(cap) if cap <= MAX_EXACT_CAP else _big_kernel_coefficients(cap)
    z = _aberth_float(_initial_guesses(cap), cap)

    bits = precision_bits or _precision_override() or _auto_bits(z, cap, coeffs[::2])
    unconverged: tuple[int, ...] = ()
    for attempt in range(3):
        with mpmath.workprec(bits):
            q = [mpmath.mpf(c) for c in coeffs[::2]]
            zs = [mpmath.mpc(complex(v)) for v in z]
            zs = _mp_aberth(q, zs, sweeps=2)
            res = _residuals(q, zs)
        bad = np.nonzero(~(res < tol))[0]
        unconverged = tuple(int(i) for i in bad)
        if not unconverged:
            break
        bits *= 2

    order = np.lexsort((np.array([float(v.real) for v in zs]),
                        np.array([float(v.imag) < 0 for v in zs])))
    roots = np.array([complex(zs[i]) for i in order])
    res = res[order]
    unconverged = tuple(int(np.nonzero(order == i)[0][0]) for i in unconverged)
    result = ComplexRootSet(int(cap), roots, float(np.max(res)), res, int(bits),
                            unconverged, tuple(zs[i] for i in order))
    if unconverged and not best_effort:
        raise ConvergenceError(
            f"{len(unconverged)} CD-kernel zeros unconverged for N={cap}", unconverged)
    return result


@lru_cache(maxsize=4)
def _big_kernel_coefficients(cap: int) -> tuple[int, ...]:
    hn = hermite_int_coefficients(cap)
    a = _polymul(hn, hn)
    b = _polymul(hermite_int_coefficients(cap + 1), hermite_int_coefficients(cap - 1))
    return tuple(int((cap + 1) * a[k] - cap * b[k]) for k in range(2 * cap + 1))


# -- structure of the zeros ---------------------------------------------------

@dataclass(frozen=True)
class ZeroStructure:
    cap: int
    upper: np.ndarray
    spacings: np.ndarray
    mean_spacing: float
    spacing_cv: float
    max_imag: float
    min_imag: float
    conjugate_residual: float
    curve_re: np.ndarray
    curve_im: np.ndarray
    window_cv: float = math.nan
    normalized_cv: float = math.nan


def _central(values: np.ndarray, fraction: float) -> np.ndarray:
    n = len(values)
    drop = int(round(n * (1.0 - fraction) / 2.0))
    return values[drop:n - drop] if n - 2 * drop > 0 else values


def _cv(values: np.ndarray) -> float:
    return float(np.std(values) / np.mean(values)) if len(values) >= 2 else math.nan


def zero_structure_report(rootset: ComplexRootSet, central: float = 0.6,
                          curve_points: int = 41, window: float = 2.75) -> ZeroStructure:
    """Spacing statistics of the upper-half-plane zeros sorted by real part.

    ``spacing_cv`` is the coefficient of variation of consecutive distances
    over the central ``central`` fraction of the upper roots; the smooth
    curve is an even least-squares polynomial fit of Im against Re.

    Two further measures of evenness are reported. ``window_cv`` uses only
    gaps whose midpoint has ``|Re| < window`` (a fixed stretch of the axis,
    independent of N). ``normalized_cv`` rescales each gap by the local
    semicircle density ``sqrt(2N+1 - x**2) / pi`` before taking the CV over
    the same central fraction, which removes the expected widening of the
    gaps toward the ends of the arc.
    """
    roots = np.asarray(rootset.roots)
    upper = roots[roots.imag > 0]
    upper = upper[np.argsort(upper.real)]
    lower = roots[roots.imag < 0]
    conj = 0.0
    if len(lower):
        conj = float(max(np.min(np.abs(np.conj(z) - lower)) for z in upper))
    spacings = np.abs(np.diff(upper))
    mid = _central(spacings, central)
    if len(mid):
        mean = float(np.mean(mid))
        cv = float(np.std(mid) / mean)
    else:
        mean, cv = math.nan, math.nan
    mids = 0.5 * (upper.real[1:] + upper.real[:-1])
    window_cv = _cv(spacings[np.abs(mids) < window])
    density = np.sqrt(np.maximum(2 * rootset.cap + 1 - mids ** 2, 0.0)) / math.pi
    normalized_cv = _cv(_central(spacings * density, central)) if len(spacings) else math.nan
    if len(upper) >= 3:
        deg = min(4, 2 * ((len(upper) - 1) // 2))
        powers = np.arange(0, deg + 1, 2)
        design = upper.real[:, None] ** powers[None, :]
        coef, *_ = np.linalg.lstsq(design, upper.imag, rcond=None)
        xs = np.linspace(upper.real.min(), upper.real.max(), curve_points)
        ys = (xs[:, None] ** powers[None, :]) @ coef
    else:
        xs, ys = upper.real.copy(), upper.imag.copy()
    return ZeroStructure(rootset.cap, upper, spacings, mean, cv,
                         float(np.max(np.abs(roots.imag))), float(np.min(np.abs(roots.imag))),
                         conj, xs, ys, window_cv, normalized_cv)


# -- Laurent coefficients of d_N ----------------------------------------------

def _taylor_at_zero(num, den, order):
    c = []
    for i in range(order + 1):
        acc = Fraction(num[i] if i < len(num) else 0)
        for j in range(1, i + 1):
            if j < len(den):
                acc -= c[i - j] * den[j]
        c.append(acc / den[0])
    return c


def _horner_mp(coeffs, z):
    p = mpmath.mpc(0)
    for c in reversed(coeffs):
        p = p * z + c
    return p


def laurent_coefficient(cap: int, k: int, rootset: ComplexRootSet | None = None) -> float:
    """Coefficient of ``l**(2-2k)`` in the large-``l`` expansion of ``d_N``.

    Computed as the contour integral of ``l**(2k-3) d_N(l)`` over a large
    circle, i.e. the sum of residues at the zeros of the CD kernel plus, for
    ``k <= 1``, the residue at the origin (a Taylor coefficient of ``d_N``,
    taken exactly from the integer polynomials).
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    if rootset is None:
        rootset = complex_zeros(cap)
    if rootset.cap != cap:
        raise ValueError("root set belongs to a different cap")
    h_next = hermite_int_coefficients(cap + 1)
    num = _polymul(h_next, h_next)
    den = [4 * c for c in _kernel_coefficients(cap)]
    dden = [j * den[j] for j in range(1, len(den))]
    power = 2 * k - 3

    origin = Fraction(0)
    if power < 0:
        origin = _taylor_at_zero(num, den, -power - 1)[-power - 1]

    zs = rootset.mp_roots or tuple(mpmath.mpc(complex(v)) for v in rootset.roots)
    with mpmath.workprec(max(rootset.precision_bits, 113)):
        total = mpmath.mpc(0)
        for z in zs:
            residue = _horner_mp(num, z) / _horner_mp(dden, z)
            total += residue * z ** power
        value = mpmath.mpf(origin.numerator) / origin.denominator + total.real
        return float(value)
