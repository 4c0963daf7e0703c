"""Finite density certificates for the limit of truncated spectra.

The truncated position spectra accumulate on the whole real line, and the
truncated phase spectra on the whole circle. Neither statement can be
tested in full; here each is checked point by point: given a target, a
tolerance and a minimum cap, find a cap and an eigenvalue close enough.
These certificates are finite evidence, not proof.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .hermite import hermite_roots, orthonormal_relative
from .io import json_line

__all__ = [
    "LimitQuery",
    "ProximityCertificate",
    "DensityReport",
    "find_near_eigenvalue",
    "spacing_estimate",
    "central_gap",
    "spacing_deviation",
    "spectrum_limit_density",
    "phase_spectrum",
    "phase_limit_density",
    "MAX_CAP",
]

MAX_CAP = 10 ** 6
TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class LimitQuery:
    target: float
    epsilon: float
    n0: int = 0

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.n0 < 0:
            raise ValueError("n0 must be >= 0")
        if not math.isfinite(self.target):
            raise ValueError("target must be finite")


@dataclass(frozen=True)
class ProximityCertificate:
    target: float
    cap_found: int
    eigenvalue: float
    distance: float
    kind: str = "quadrature"

    def to_json(self) -> str:
        return json_line({"target": self.target, "cap": self.cap_found,
                          "eigenvalue": self.eigenvalue, "distance": self.distance})


def _root_residual(x: float, cap: int) -> float:
    """``|h_{N+1}(x)| / sqrt(sum_{n<=N+1} h_n(x)**2)``; scale free."""
    vals, _ = orthonormal_relative(np.array(x), cap + 1)
    return float(abs(vals[-1]) / math.sqrt(float(np.sum(vals ** 2))))


def first_feasible_cap(target: float, n0: int) -> int:
    """Smallest ``N >= n0`` whose eigenvalue range ``sqrt(2N+1)`` exceeds ``|target|``."""
    need = math.floor((target * target - 1.0) / 2.0) + 1 if abs(target) >= 1 else 0
    return max(n0, need)


EXACT_SCAN_CAP = 150


def predicted_root(target: float, degree):
    """WKB estimate of the root of ``H_degree`` nearest ``target``.

    ``h_n(x) e^{-x^2/2}`` oscillates like ``cos(F(x) - pi/4)`` with
    ``F(x) = int_{-a}^{x} sqrt(a^2 - s^2) ds`` and ``a^2 = 2n+1``; roots sit
    where ``F - 3 pi/4`` is a multiple of ``pi``. Needs ``target**2 < 2n+1``.
    Vectorised over ``degree``.
    """
    e = 2.0 * np.asarray(degree, float) + 1.0
    p = np.sqrt(e - target * target)
    f = 0.5 * e * (np.arcsin(target / np.sqrt(e)) + 0.5 * math.pi) + 0.5 * target * p
    g = f - 0.75 * math.pi
    out = target - (g - math.pi * np.round(g / math.pi)) / p
    return out[()] if out.ndim == 0 else out


def _newton_root(x: float, degree: int, steps: int = 30) -> float:
    """Newton on ``h_degree`` using ``h_n' = sqrt(2n) h_{n-1}``.

    Stops at a step of a few ulp, or once steps stop shrinking (rounding
    noise in the recurrence).
    """
    prev = math.inf
    for _ in range(steps):
        vals, _ = orthonormal_relative(np.array(x), degree)
        step = float(vals[-1] / (math.sqrt(2.0 * degree) * vals[-2]))
        if abs(step) >= prev:
            break
        x -= step
        if abs(step) <= 4.0 * math.ulp(x):
            break
        prev = abs(step)
    return x


def _nearest_exact(target: float, cap: int) -> tuple[float, float]:
    roots = hermite_roots(cap + 1).roots
    i = int(np.searchsorted(roots, target))
    best = None
    for j in (i - 1, i):
        if 0 <= j < len(roots):
            dist = abs(target - roots[j])
            if best is None or dist < best[0]:
                best = (dist, float(roots[j]))
    return best


def _predicted_candidates(target: float, caps: np.ndarray, epsilon: float) -> np.ndarray:
    """Caps whose predicted nearest root is confidently within ``epsilon``."""
    degree = caps + 1
    local_gap = math.pi / np.sqrt(2.0 * degree + 1.0 - target * target)
    x0 = predicted_root(target, degree)
    margin = 1e-3 * local_gap
    # a prediction inside the uncertain band is skipped when epsilon is large
    # enough for a confident hit to follow a few caps later
    limit = np.where(margin < 0.5 * epsilon, epsilon - margin, epsilon + margin)
    return caps[np.abs(x0 - target) < limit]


def _nearest_predicted(target: float, cap: int) -> tuple[float, float] | None:
    degree = cap + 1
    local_gap = math.pi / math.sqrt(2 * degree + 1 - target * target)
    x0 = float(predicted_root(target, degree))
    x = _newton_root(x0, degree)
    if abs(x - x0) > 0.25 * local_gap:
        return None
    return abs(target - x), x


def find_near_eigenvalue(q: LimitQuery, max_cap: int = MAX_CAP) -> ProximityCertificate:
    """Probe caps upward from the first feasible one until a root is within ``epsilon``.

    Up to ``EXACT_SCAN_CAP`` every root set is computed, so the first such
    cap is returned. Beyond it only the root of ``H_{N+1}`` predicted nearest
    the target is Newton-polished, and only when the prediction is within
    ``epsilon`` by more than a thousandth of the local gap (the prediction
    error is below a ten-thousandth of the gap away from the turning point,
    where the exact scan is kept). The cap found can then be a few past the
    first one. Targets close to the origin need caps in the hundreds of
    thousands, which this makes affordable. Either way the returned
    eigenvalue is re-verified as a root. Termination is guaranteed in exact
    arithmetic since the spacing near a fixed point shrinks like
    ``pi / sqrt(2N+1)`` while roots drift with ``N``; ``max_cap`` is only a
    safety net.
    """
    def certify(cap, best):
        if _root_residual(best[1], cap) > 1e-9:
            raise ArithmeticError(f"root {best[1]} of H_{cap + 1} failed verification")
        return ProximityCertificate(float(q.target), cap, best[1], float(best[0]))

    cap = first_feasible_cap(q.target, q.n0)
    while cap <= max_cap and (cap <= EXACT_SCAN_CAP or q.target * q.target > cap + 0.5):
        best = _nearest_exact(q.target, cap)
        if best[0] < q.epsilon:
            return certify(cap, best)
        cap += 1
    while cap <= max_cap:
        block = np.arange(cap, min(cap + 4096, max_cap + 1))
        for c in _predicted_candidates(q.target, block, q.epsilon):
            best = _nearest_predicted(q.target, int(c))
            if best is not None and best[0] < q.epsilon:
                return certify(int(c), best)
        cap = int(block[-1]) + 1
    raise RuntimeError(f"no eigenvalue within {q.epsilon} of {q.target} up to cap {max_cap}")


def spacing_estimate(cap: int) -> float:
    """Asymptotic gap ``pi / sqrt(2N+1)`` between neighbouring eigenvalues."""
    if cap < 1:
        raise ValueError("cap must be >= 1")
    return math.pi / math.sqrt(2 * cap + 1)


def central_gap(cap: int) -> float:
    """Gap between the two roots of ``H_{N+1}`` closest to the origin."""
    if cap < 1:
        raise ValueError("cap must be >= 1")
    roots = hermite_roots(cap + 1).roots
    i = int(np.argmin(np.abs(roots)))
    j = i + 1 if i + 1 < len(roots) else i - 1
    return float(abs(roots[j] - roots[i]))


def spacing_deviation(cap: int, fraction: float = 0.5) -> float:
    """Max relative deviation of the central ``fraction`` of gaps from the estimate."""
    roots = hermite_roots(cap + 1).roots
    gaps = np.diff(roots)
    m = len(gaps)
    keep = max(1, int(round(fraction * m)))
    lo = (m - keep) // 2
    central = gaps[lo: lo + keep]
    est = spacing_estimate(cap)
    return float(np.max(np.abs(central - est)) / est)


@dataclass(frozen=True)
class DensityReport:
    epsilon: float
    n0: int
    certificates: tuple[ProximityCertificate, ...] = field(default_factory=tuple)
    note: str = "finite evidence, not proof"

    @property
    def max_cap(self) -> int | None:
        return max((c.cap_found for c in self.certificates), default=None)

    @property
    def complete(self) -> bool:
        return all(c.distance < self.epsilon for c in self.certificates)

    def json_lines(self) -> str:
        return "".join(c.to_json() + "\n" for c in self.certificates)


def spectrum_limit_density(grid, epsilon: float, n0: int) -> DensityReport:
    certs = tuple(find_near_eigenvalue(LimitQuery(float(x), epsilon, n0)) for x in grid)
    return DensityReport(float(epsilon), int(n0), certs)


def phase_spectrum(cap: int, theta0: float = 0.0) -> np.ndarray:
    """``theta0 + 2 pi k / (N+1)`` for ``k = 0..N``, reduced to ``[0, 2 pi)``."""
    if cap < 0:
        raise ValueError("cap must be >= 0")
    gap = TWO_PI / (cap + 1)
    # sequential sums: each step is one rounding, so neighbours differ by the
    # gap to within half an ulp of the larger point
    steps = np.full(cap + 1, gap)
    steps[0] = theta0
    return np.mod(np.cumsum(steps), TWO_PI)


def circular_distance(a: float, b: float) -> float:
    return abs(math.remainder(a - b, TWO_PI))


def phase_limit_density(target_theta: float, epsilon: float, n0: int = 0,
                        theta0: float = 0.0) -> ProximityCertificate:
    """Nearest phase point within ``epsilon`` of ``target_theta``.

    Any ``N >= max(n0, ceil(pi/epsilon) - 1)`` works, since the gap is
    ``2 pi / (N+1)``; the search starts at ``n0`` and stops at the first
    success, which is no later than that bound.
    """
    LimitQuery(target_theta, epsilon, n0)
    bound = max(n0, math.ceil(math.pi / epsilon) - 1)
    for cap in range(n0, bound + 1):
        k = round((target_theta - theta0) * (cap + 1) / TWO_PI) % (cap + 1)
        best = None
        for kk in (k - 1, k, k + 1):
            kk %= cap + 1
            # the fraction first, so that k/(N+1) = 1/2 lands on pi exactly
            theta = math.fmod(theta0 + TWO_PI * (kk / (cap + 1)), TWO_PI)
            theta = theta + TWO_PI if theta < 0 else theta
            dist = circular_distance(theta, target_theta)
            if best is None or dist < best[0]:
                best = (dist, theta)
        if best[0] < epsilon:
            return ProximityCertificate(float(target_theta), cap, best[1], float(best[0]), "phase")
    raise RuntimeError("phase search exceeded its a-priori bound")
