"""Truncated field quadratures on the (N+1)-dimensional Fock space."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.interpolate import make_interp_spline

from .hermite import (
    _ldexp,
    eval_hermite_sequence,
    hermite_functions,
    hermite_roots,
    orthonormal_relative,
)
from .io import fmt_float
from .cdkernel import kernel_scaled
from .scaled import ScaledReal

__all__ = [
    "TruncatedQuadrature",
    "EigenDecomposition",
    "MinimalPolynomialReport",
    "build",
    "charpoly_value",
    "diagonalize",
    "projector_kernel",
    "apply_projector",
    "cayley_hamilton_residual",
    "minimal_polynomial_check",
    "matrix_polynomial_norms",
]


@dataclass(frozen=True)
class TruncatedQuadrature:
    """``U(beta) xi_N U(beta)^dagger`` stored as tridiagonal data plus phases."""

    cap: int
    beta: float
    diag: np.ndarray
    offdiag: np.ndarray
    phase_factors: np.ndarray

    @property
    def dim(self) -> int:
        return self.cap + 1

    def real_matrix(self) -> np.ndarray:
        """The beta = 0 position-quadrature matrix."""
        return np.diag(self.diag) + np.diag(self.offdiag, 1) + np.diag(self.offdiag, -1)

    def matrix(self) -> np.ndarray:
        """Dense matrix; complex unless beta is 0."""
        base = self.real_matrix()
        if self.beta == 0.0:
            return base
        return self.phase_factors[:, None] * base * np.conj(self.phase_factors)[None, :]

    def matvec(self, v: np.ndarray) -> np.ndarray:
        """Apply the beta = 0 matrix to a vector without forming it."""
        v = np.asarray(v)
        out = self.diag * v
        out[:-1] += self.offdiag * v[1:]
        out[1:] += self.offdiag * v[:-1]
        return out


def build(cap: int, beta: float = 0.0) -> TruncatedQuadrature:
    if cap < 0:
        raise ValueError("cap must be >= 0")
    n = np.arange(cap + 1)
    offdiag = np.sqrt(np.arange(1, cap + 1) / 2.0)
    return TruncatedQuadrature(int(cap), float(beta), np.zeros(cap + 1), offdiag,
                               np.exp(1j * beta * n))


def charpoly_value(q: TruncatedQuadrature, lam: float) -> ScaledReal:
    """``det(xi_N + lam) = H_{N+1}(lam) / 2**(N+1)``.

    The value is the same for every beta by unitary similarity, so the
    position form is used regardless of ``q.beta``.
    """
    seq = eval_hermite_sequence(lam, q.cap + 1)
    return seq.values[q.cap + 1].scale2(-(q.cap + 1))


@dataclass(frozen=True)
class EigenDecomposition:
    cap: int
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def to_json(self) -> str:
        vals = ", ".join(fmt_float(v) for v in self.eigenvalues)
        rows = ", ".join("[" + ", ".join(fmt_float(v) for v in row) + "]"
                         for row in self.eigenvectors)
        return f'{{"cap": {self.cap}, "eigenvalues": [{vals}], "eigenvectors": [{rows}]}}'

    @classmethod
    def from_json(cls, text: str) -> EigenDecomposition:
        data = json.loads(text)
        return cls(int(data["cap"]), np.array(data["eigenvalues"], dtype=float),
                   np.array(data["eigenvectors"], dtype=float))


def diagonalize(q: TruncatedQuadrature) -> EigenDecomposition:
    """Eigenpairs from the Hermite closed forms, not a generic eigensolver.

    Column ``k`` holds ``h_n(l_k) / sqrt(sum_m h_m(l_k)**2)``; eigenvalues are
    the zeros of ``H_{N+1}``. For ``beta != 0`` the eigenvectors of the
    rotated quadrature are ``U(beta)`` times these columns (see
    :meth:`TruncatedQuadrature.phase_factors`); the real ones are returned.
    """
    roots = hermite_roots(q.cap + 1).roots
    vals, _ = orthonormal_relative(roots, q.cap)
    vecs = vals / np.sqrt(np.sum(vals ** 2, axis=0))[None, :]
    return EigenDecomposition(q.cap, roots, vecs)


def projector_kernel(cap: int, xi, xi_prime):
    """``<xi|Pi_N|xi'>`` via the Christoffel-Darboux quotient.

    Vectorised over broadcastable ``xi`` and ``xi_prime``.
    """
    xi, xi_prime = np.broadcast_arrays(np.asarray(xi, float), np.asarray(xi_prime, float))
    m, e, _ = kernel_scaled(xi, xi_prime, cap)
    logs = e * math.log(2.0) - 0.5 * (xi ** 2 + xi_prime ** 2)
    out = m * np.exp(logs) / math.sqrt(math.pi)
    return out[()] if out.ndim == 0 else out


def _resolve(psi, grid):
    if callable(psi):
        return psi
    if grid is None:
        raise ValueError("a sampled wavefunction needs its grid")
    grid = np.asarray(grid, float)
    values = np.asarray(psi)
    spline = make_interp_spline(grid, values, k=5)
    lo, hi = grid[0], grid[-1]

    def f(x):
        x = np.asarray(x, float)
        inside = (x >= lo) & (x <= hi)
        out = np.zeros(x.shape, dtype=values.dtype)
        out[inside] = spline(x[inside])
        return out

    return f


def number_overlaps(cap: int, psi: Callable | np.ndarray, grid=None, nodes: int | None = None):
    """``<n|psi>`` for ``n = 0..cap`` by Gauss-Hermite quadrature.

    ``psi(x) = e^{-x^2/2} g(x)`` is integrated against ``<x|n>`` with
    ``cap + 40`` nodes by default.
    """
    f = _resolve(psi, grid)
    nodes = nodes or cap + 40
    rs = hermite_roots(nodes, want_weights=True)
    x, w = rs.roots, rs.weights
    vals, top = orthonormal_relative(x, cap)
    # w e^{x^2} <x|n> = w h_n(x) e^{x^2/2} pi^{-1/4}
    scale = np.exp(top * math.log(2.0) + 0.5 * x ** 2) * math.pi ** -0.25
    return vals @ (w * scale * f(x))


def apply_projector(cap: int, psi: Callable | np.ndarray, grid=None,
                    nodes: int | None = None) -> np.ndarray | Callable:
    """``Pi_N psi`` sampled on ``grid``.

    ``psi`` is either samples on ``grid`` or a callable. With samples, the
    grid must resolve the oscillations of ``<xi|cap>`` (spacing below
    ``pi / (2 sqrt(2 cap + 3))``); otherwise ``ValueError`` is raised. With a
    callable and no grid, a callable is returned.
    """
    if grid is not None:
        grid = np.asarray(grid, float)
        if grid.ndim != 1 or len(grid) < 6 or np.any(np.diff(grid) <= 0):
            raise ValueError("grid must be strictly increasing with at least 6 points")
        limit = math.pi / (2.0 * math.sqrt(2 * cap + 3))
        if np.max(np.diff(grid)) >= limit:
            raise ValueError(f"grid spacing must be below {limit:.4g} for cap={cap}")
    coeffs = number_overlaps(cap, psi, grid, nodes)

    def projected(x):
        return coeffs @ hermite_functions(np.asarray(x, float), cap)

    if grid is None:
        return projected
    return projected(grid)


# -- matrix polynomials -------------------------------------------------------

def _fixed_point_matrix_norms(cap: int, degree: int, bits: int) -> list[float]:
    """Max-norms of ``h_k(xi_N)``, ``k = 0..degree``, in fixed point.

    Entries are Python ints scaled by ``2**bits``; the square roots in the
    matrix and the recurrence are rounded once at that precision.
    """
    one = 1 << bits
    size = cap + 1

    def isqrt_scaled(num: int, den: int) -> int:
        # round(sqrt(num/den) * 2**bits)
        return math.isqrt((num << (2 * bits)) // den)

    off = [isqrt_scaled(k, 2) for k in range(1, size)]
    sqrt2 = isqrt_scaled(2, 1)
    prev = None
    cur = [[one if i == j else 0 for j in range(size)] for i in range(size)]
    norms = [1.0]

    def xmul(mat):
        out = []
        for i in range(size):
            row = [0] * size
            if i > 0:
                a = off[i - 1]
                src = mat[i - 1]
                row = [r + a * s for r, s in zip(row, src)]
            if i < size - 1:
                a = off[i]
                src = mat[i + 1]
                row = [r + a * s for r, s in zip(row, src)]
            out.append([v >> bits for v in row])
        return out

    for k in range(degree):
        xm = xmul(cur)
        inv = isqrt_scaled(1, k + 1)
        sk = isqrt_scaled(k, 1)
        nxt = []
        for i in range(size):
            xr = xm[i]
            if prev is None:
                row = [(sqrt2 * a) >> bits for a in xr]
            else:
                pr = prev[i]
                row = [((sqrt2 * a - sk * b) >> bits) for a, b in zip(xr, pr)]
            nxt.append([(v * inv) >> bits for v in row])
        prev, cur = cur, nxt
        norms.append(max(abs(v) for row in cur for v in row) / one)
    return norms


def matrix_polynomial_norms(cap: int, degree: int | None = None,
                            bits: int | None = None) -> list[float]:
    """``max|h_k(xi_N)|`` for ``k = 0..degree`` (default ``cap + 1``).

    Uses the matrix form of the orthonormal recurrence
    ``h_{k+1}(X) = (sqrt(2) X h_k(X) - sqrt(k) h_{k-1}(X)) / sqrt(k+1)``.
    Intermediate entries grow roughly like ``e^{N}``, so the recurrence runs in
    fixed-point integer arithmetic with ``bits`` fractional bits (default
    ``160 + 4 N``) rather than in doubles.
    """
    if cap < 0:
        raise ValueError("cap must be >= 0")
    degree = cap + 1 if degree is None else degree
    bits = bits or 160 + 4 * cap
    return _fixed_point_matrix_norms(cap, degree, bits)


def cayley_hamilton_residual(cap: int) -> float:
    """``max|h_{N+1}(xi_N)|``, which vanishes since ``H_{N+1}(xi_N) = 0``."""
    return matrix_polynomial_norms(cap)[-1]


@dataclass(frozen=True)
class MinimalPolynomialReport:
    cap: int
    norms: tuple[float, ...]
    residual: float
    lower_degrees_nonzero: bool
    threshold: float = 1e-6

    @property
    def ok(self) -> bool:
        return self.lower_degrees_nonzero and self.residual < 1e-10 * (self.cap + 1)


def minimal_polynomial_check(cap: int) -> MinimalPolynomialReport:
    """Check that no ``h_k`` with ``k <= N`` annihilates ``xi_N``."""
    if cap < 1:
        raise ValueError("cap must be >= 1")
    norms = matrix_polynomial_norms(cap)
    lower = norms[:-1]
    return MinimalPolynomialReport(cap, tuple(norms), norms[-1], all(v > 1e-6 for v in lower))
