"""End-to-end acceptance checks with independent oracles.

Each ``acNN`` function returns a :class:`CriterionResult`. Oracles are kept
apart from the code under test: dense LAPACK eigensolvers for spectra,
``scipy.special`` Hermite polynomials for wavefunctions, extended-precision
``mpmath`` arithmetic for residuals, and closed-form values where known.

``perturb`` shifts the off-diagonal of the oracle matrices; a nonzero value
is a negative control and must make the spectrum checks fail.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import mpmath
import numpy as np
from scipy.optimize import brentq
from scipy.special import eval_hermite, gammaln

from . import cdkernel as cdk
from . import limits, pseudo, quadrature
from .hermite import discrete_orthogonality_check, hermite_roots, orthonormal_relative

__all__ = ["CriterionResult", "run_suite", "CRITERIA"]


@dataclass(frozen=True)
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"AC{self.number:02d} {status} {self.name}: {self.detail} ({self.seconds:.1f}s)"


def _oracle_matrix(cap: int, perturb: float = 0.0) -> np.ndarray:
    off = np.array([math.sqrt(k / 2.0) for k in range(1, cap + 1)]) * (1.0 + perturb)
    return np.diag(off, 1) + np.diag(off, -1)


def ac01(perturb: float = 0.0, **_) -> tuple[bool, str]:
    worst = 0.0
    for cap in (1, 5, 16, 50, 100):
        oracle = np.linalg.eigvalsh(_oracle_matrix(cap, perturb))
        worst = max(worst, float(np.max(np.abs(oracle - hermite_roots(cap + 1).roots))))
    return worst < 1e-12, f"max |eig - root| = {worst:.2e} (tol 1e-12)"


def ac02(**_) -> tuple[bool, str]:
    r2 = hermite_roots(2).roots
    r3 = hermite_roots(3).roots
    e2 = np.max(np.abs(r2 - np.array([-1.0, 1.0]) / math.sqrt(2.0)))
    e3 = np.max(np.abs(r3 - np.array([-math.sqrt(1.5), 0.0, math.sqrt(1.5)])))
    worst = float(max(e2, e3))
    return worst < 1e-14, f"max error {worst:.2e} (tol 1e-14)"


def _mp_residual_sq(lam: float, cap: int, perturb: float) -> float:
    # the state and the matrix action in 50 digits
    with mpmath.workdps(50):
        x = mpmath.mpf(lam)
        h = [mpmath.mpf(1), mpmath.sqrt(2) * x]
        for n in range(1, cap):
            h.append((mpmath.sqrt(2) * x * h[n] - mpmath.sqrt(n) * h[n - 1]) / mpmath.sqrt(n + 1))
        h = h[: cap + 1]
        norm = mpmath.sqrt(mpmath.fsum(v * v for v in h))
        c = [v / norm for v in h]
        off = [mpmath.sqrt(mpmath.mpf(k) / 2) * (1 + mpmath.mpf(perturb)) for k in range(1, cap + 1)]
        total = mpmath.mpf(0)
        for n in range(cap + 1):
            r = -x * c[n]
            if n > 0:
                r += off[n - 1] * c[n - 1]
            if n < cap:
                r += off[n] * c[n + 1]
            total += r * r
        return float(total)


def ac03(perturb: float = 0.0, samples: int = 1000, **_) -> tuple[bool, str]:
    rng = np.random.default_rng(20240603)
    worst_comp = 0.0
    worst_rel = 0.0
    for _ in range(samples):
        lam = float(rng.uniform(-20.0, 20.0))
        cap = int(rng.integers(1, 101))
        m = _oracle_matrix(cap, perturb)
        state = pseudo.build_state(lam, cap)
        r = m @ state.coeffs - lam * state.coeffs
        scale = np.linalg.norm(m, 2)
        worst_comp = max(worst_comp, float(np.max(np.abs(r[:-1]))) / scale)
        exact = _mp_residual_sq(lam, cap, perturb)
        worst_rel = max(worst_rel, abs(pseudo.d_measure(lam, cap) - exact) / exact)
    ok = worst_comp < 1e-12 and worst_rel < 1e-11
    return ok, (f"max off-last component / ||xi_N|| = {worst_comp:.2e} (tol 1e-12); "
                f"max rel |d - ||r||^2| = {worst_rel:.2e} (tol 1e-11)")


def ac04(points: int = 10_000, **_) -> tuple[bool, str]:
    rng = np.random.default_rng(7)
    worst = 0.0
    used = 0
    caps = (8, 15, 50)
    for i, cap in enumerate(caps):
        edge = math.sqrt(2 * cap + 1) + 3.0
        lam = rng.uniform(-edge, edge, points // len(caps) + (i < points % len(caps)))
        vals, _ = orthonormal_relative(lam, cap + 1)
        away = np.abs(vals[-1]) / np.sqrt(np.sum(vals ** 2, axis=0)) > 1e-6
        lam = lam[away]
        used += lam.size
        a = pseudo.d_measure(lam, cap)
        b = pseudo.d_measure_logform(lam, cap)
        c = pseudo.d_measure_ratio(lam, cap)
        for x, y in ((a, b), (a, c), (b, c)):
            worst = max(worst, float(np.max(np.abs(x - y) / np.abs(x))))
    return worst < 1e-9, f"{used} points, max pairwise rel diff {worst:.2e} (tol 1e-9)"


def ac05(**_) -> tuple[bool, str]:
    worst = 0.0
    for cap in (5, 15, 30):
        rs = cdk.complex_zeros(cap)
        expected = (1.0, -1.5 * cap, cap * (5.0 - cap) / 4.0)
        for k, want in enumerate(expected):
            got = cdk.laurent_coefficient(cap, k, rs)
            # alpha_2 vanishes at N = 5, so the error is scaled by max(1, |want|)
            worst = max(worst, abs(got - want) / max(1.0, abs(want)))
    return worst < 1e-6, f"max rel error {worst:.2e} (tol 1e-6)"


def _approx_zeros(cap: int, lim: float) -> np.ndarray:
    # zeros of the oscillatory approximant are where its numerator vanishes
    a = 2 * cap + 3
    sign = (-1) ** (cap + 1)

    def phase(x):
        return 2.0 * math.sqrt(a) * x * (1.0 - x * x / (6.0 * a))

    # numerator 1 + sign*cos(phase) vanishes at phase = pi*(2m+1) (sign +) or 2 pi m (sign -)
    lo, hi = phase(-lim), phase(lim)
    offset = math.pi if sign > 0 else 0.0
    ms = np.arange(math.ceil((lo - offset) / (2 * math.pi)),
                   math.floor((hi - offset) / (2 * math.pi)) + 1)
    return np.array([brentq(lambda x, t=offset + 2 * math.pi * m: phase(x) - t, -lim, lim)
                     for m in ms])


def ac06(**_) -> tuple[bool, str]:
    cap = 15
    lim = math.sqrt(2 * cap + 1)
    grid = np.linspace(-6.0, 6.0, 1201)
    inside = grid[np.abs(grid) < lim]
    approx = pseudo.d_approx_oscillatory(inside, cap)
    exact = pseudo.d_measure(inside, cap)
    err = np.abs(approx.value - exact)[~approx.pole_flag]
    worst = float(np.max(err))
    zeros = _approx_zeros(cap, lim)
    roots = hermite_roots(cap + 1).roots
    tol = 0.1 * math.pi / lim
    # each eigenvalue against its nearest approximant zero; spurious extra
    # zeros near the edge of the region do not count against the criterion
    shift = float(np.max(np.min(np.abs(zeros[None, :] - roots[:, None]), axis=1)))
    ok = worst < 0.05 and shift < tol
    return ok, (f"{err.size} unflagged points in |lam| < sqrt(31), max |approx - exact| = "
                f"{worst:.3f} (tol 0.05); {len(zeros)} approximant zeros vs {len(roots)} "
                f"eigenvalues, max eigenvalue-to-nearest-zero offset {shift:.3f} (tol {tol:.3f})")


def ac07(**_) -> tuple[bool, str]:
    worst = 0.0
    for cap in (8, 16, 50):
        for deg in (cap + 1, cap):
            r = hermite_roots(deg).roots
            worst = max(worst, float(np.max(np.abs(pseudo.expectation_xi(r, cap) - r))))
    return worst < 1e-11, f"max |<xi> - lam| = {worst:.2e} (tol 1e-11)"


def ac08(**_) -> tuple[bool, str]:
    a = max(abs(pseudo.variance_full(0.0, cap) - 0.5) for cap in (4, 8, 16, 64))
    rng = np.random.default_rng(11)
    b = 0.0
    for _ in range(500):
        lam = float(rng.uniform(-15.0, 15.0))
        cap = int(rng.integers(1, 101))
        st = pseudo.build_state(lam, cap)
        diff = pseudo.variance_full(lam, cap) - pseudo.variance_truncated(lam, cap)
        b = max(b, abs(diff - 0.5 * (cap + 1) * st.coeffs[-1] ** 2))
    cap = 16
    lam = 3.0 * math.sqrt(2 * cap + 1)
    vt = pseudo.variance_truncated(lam, cap)
    vf = pseudo.variance_full(lam, cap)
    c1 = abs(pseudo.variance_truncated_approx(lam, cap, "quadratic").value - vt) / vt
    c2 = abs(pseudo.variance_full_approx(lam, cap, "quadratic").value - vf) / vf
    ok = a < 1e-12 and b < 1e-13 and c1 < 1e-3 and c2 < 1e-3
    return ok, (f"(a) {a:.1e} (b) {b:.1e} (c) truncated {c1:.1e}, full {c2:.1e}")


def ac09(**_) -> tuple[bool, str]:
    worst = 0.0
    for cap in (3, 10, 40):
        rs = hermite_roots(cap + 12, want_weights=True)
        vals, top = orthonormal_relative(rs.roots, cap)
        k = np.ldexp(np.sum(vals ** 2, axis=0), 2 * top)
        total = math.fsum(rs.weights * k) / math.sqrt(math.pi)
        worst = max(worst, abs(total - (cap + 1)) / (cap + 1))
    return worst < 1e-10, f"max rel error {worst:.2e} (tol 1e-10)"


def ac10(**_) -> tuple[bool, str]:
    worst = 0.0
    for cap in (5, 10, 20):
        for m in range(cap + 1):
            for n in range(m, cap + 1):
                s = discrete_orthogonality_check(m, n, cap)
                worst = max(worst, abs(s - (1.0 if m == n else 0.0)))
    return worst < 1e-10, f"max |sum - delta| = {worst:.2e} (tol 1e-10)"


def ac11(**_) -> tuple[bool, str]:
    parts = []
    ok = True
    for cap in (1, 16, 100):
        rep = quadrature.minimal_polynomial_check(cap)
        ok &= rep.residual < 1e-10 * (cap + 1) and rep.lower_degrees_nonzero
        parts.append(f"N={cap}: {rep.residual:.1e}, min lower {min(rep.norms[:-1]):.2f}")
    return ok, "; ".join(parts)


def ac12(caps=(5, 10, 25, 50, 100), best_effort=(), **_) -> tuple[bool, str]:
    ok = True
    cvs = {}
    extra = []
    for cap in caps:
        rs = cdk.complex_zeros(cap)
        rep = cdk.zero_structure_report(rs)
        ok &= len(rs.roots) == 2 * cap
        ok &= rep.conjugate_residual < 1e-9
        ok &= rep.min_imag > 1e-6
        ok &= rs.max_residual < 1e-9
        cvs[cap] = rep
    trend = [c for c in caps if c >= 10]
    cv_seq = [cvs[c].spacing_cv for c in trend]
    decreasing = all(b < a for a, b in zip(cv_seq, cv_seq[1:]))
    ok &= decreasing
    for cap in best_effort:
        rs = cdk.complex_zeros(cap, best_effort=True)
        extra.append(f"N={cap} best effort: max residual {rs.max_residual:.1e}, "
                     f"{len(rs.unconverged)} unconverged")
    detail = ("structure checks on N=" + ",".join(map(str, caps)) + "; central-60% CV "
              + " ".join(f"{c}:{cvs[c].spacing_cv:.4f}" for c in trend)
              + (" decreasing" if decreasing else " NOT decreasing")
              + "; window CV " + " ".join(f"{c}:{cvs[c].window_cv:.4f}" for c in trend)
              + "; density-normalised CV "
              + " ".join(f"{c}:{cvs[c].normalized_cv:.2e}" for c in trend))
    if extra:
        detail += "; " + "; ".join(extra)
    return ok, detail


def ac13(step: float = 0.1, **_) -> tuple[bool, str]:
    n = int(round(10.0 / step))
    grid = np.round(np.arange(-n, n + 1) * step, 12)
    rep = limits.spectrum_limit_density(grid, 1e-3, 100)
    # recompute every distance against a dense eigensolver of the matrix itself
    dense = {}
    worst = 0.0
    for c in rep.certificates:
        if c.cap_found not in dense:
            dense[c.cap_found] = np.linalg.eigvalsh(_oracle_matrix(c.cap_found))
        eig = dense[c.cap_found]
        worst = max(worst, float(np.min(np.abs(eig - c.eigenvalue))))
    indep = worst < 1e-10 and all(abs(c.target - c.eigenvalue) < 1e-3 for c in rep.certificates)
    # "central gaps": the gap straddling the origin, as in the spacing estimate
    ratio = limits.central_gap(200) / limits.spacing_estimate(200)
    dev = abs(ratio - 1.0)
    wide = limits.spacing_deviation(200, 0.5)
    ok = rep.complete and indep and len(rep.certificates) == len(grid) and dev < 0.05
    return ok, (f"{len(rep.certificates)}/{len(grid)} certificates, max cap {rep.max_cap}, "
                f"max offset from dense eigenvalues {worst:.1e}; "
                f"central gap deviation at N=200 {dev:.4f} (tol 0.05); "
                f"over the central half of all gaps it is {wide:.3f}")


def ac14(**_) -> tuple[bool, str]:
    rng = np.random.default_rng(3)
    eps = 1e-4
    limit = math.ceil(2 * math.pi / eps)
    ok = True
    worst_ulps = 0.0
    for theta in rng.uniform(0.0, 2 * math.pi, 100):
        cert = limits.phase_limit_density(float(theta), eps, 0)
        ok &= cert.cap_found <= limit and cert.distance < eps
        pts = np.sort(limits.phase_spectrum(cert.cap_found, 0.0))
        gap = 2 * math.pi / (cert.cap_found + 1)
        d = np.diff(pts)
        worst_ulps = max(worst_ulps, float(np.max(np.abs(d - gap) / np.spacing(pts[1:]))))
    ok &= worst_ulps <= 1.0
    return ok, f"100 certificates within bound; max gap error {worst_ulps:.2f} ulp (tol 1)"


def _scipy_states(lam: float, cap: int, xi: np.ndarray):
    n = np.arange(cap + 1)
    lognorm = 0.5 * (n * math.log(2.0) + gammaln(n + 1))
    h_lam = eval_hermite(n, lam) / np.exp(lognorm)
    coeffs = h_lam / math.sqrt(float(np.sum(h_lam ** 2)))
    funcs = np.array([eval_hermite(k, xi) * np.exp(-0.5 * xi ** 2 - lognorm[k])
                      for k in n]) / math.pi ** 0.25
    return coeffs, funcs


def ac15(**_) -> tuple[bool, str]:
    cap = 16
    xi = np.linspace(-10.0, 10.0, 2001)
    gh = hermite_roots(40, want_weights=True)
    worst = 0.0
    worst_norm = 0.0
    for lam in (-5.0, -2.0, 0.0, 2.0, 5.0, 10.0):
        coeffs, funcs = _scipy_states(lam, cap, xi)
        direct = coeffs @ funcs
        worst = max(worst, float(np.max(np.abs(pseudo.wavefunction(xi, lam, cap) - direct))))
        psi = pseudo.wavefunction(gh.roots, lam, cap)
        norm = math.fsum(gh.weights * np.exp(gh.roots ** 2) * psi ** 2)
        worst_norm = max(worst_norm, abs(norm - 1.0))
    ok = worst < 1e-11 and worst_norm < 1e-10
    return ok, f"max |CD - direct| = {worst:.2e} (tol 1e-11); max |norm - 1| = {worst_norm:.2e}"


def ac16(**_) -> tuple[bool, str]:
    weight = float(pseudo.build_state(10.0, 16).coeffs[-1] ** 2)
    special = pseudo.special_state_residual(16, 3.0)
    ok = weight > 0.99 and abs(special - 17.0) <= 1e-12 * 17.0
    return ok, f"|<N|lam>|^2 at lam=10, N=16 = {weight:.4f} (need > 0.99); residual(16, 3) = {special!r}"


CRITERIA: dict[int, tuple[str, Callable]] = {
    1: ("spectrum identity", ac01),
    2: ("exact low-order roots", ac02),
    3: ("residual structure", ac03),
    4: ("three-form d_N agreement", ac04),
    5: ("Laurent coefficients", ac05),
    6: ("oscillatory approximant", ac06),
    7: ("expectation fixed points", ac07),
    8: ("dispersion identities", ac08),
    9: ("trace identity", ac09),
    10: ("discrete orthogonality", ac10),
    11: ("Cayley-Hamilton", ac11),
    12: ("CD zeros", ac12),
    13: ("spectrum-limit density", ac13),
    14: ("phase-circle density", ac14),
    15: ("wavefunction consistency", ac15),
    16: ("collapse to |N>", ac16),
}

FAST_OPTIONS = {3: {"samples": 300}, 12: {"caps": (5, 10, 25, 50)}, 13: {"step": 0.5}}
FULL_OPTIONS = {12: {"best_effort": (150, 500)}}


def run_criterion(number: int, **options) -> CriterionResult:
    name, fn = CRITERIA[number]
    t0 = time.perf_counter()
    try:
        passed, detail = fn(**options)
    except Exception as exc:  # report, never crash the suite
        passed, detail = False, f"error: {type(exc).__name__}: {exc}"
    return CriterionResult(number, name, bool(passed), detail, time.perf_counter() - t0)


def run_suite(suite: str = "full", perturb: float = 0.0) -> list[CriterionResult]:
    if suite not in ("fast", "full"):
        raise ValueError("suite must be 'fast' or 'full'")
    table = FAST_OPTIONS if suite == "fast" else FULL_OPTIONS
    return [run_criterion(n, perturb=perturb, **table.get(n, {})) for n in sorted(CRITERIA)]
