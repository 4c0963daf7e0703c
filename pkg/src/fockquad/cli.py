"""Command-line front end: spectra, figure data, limit certificates, validation.

All data files are deterministic: fixed grids, fixed iteration order and
shortest round-trip float formatting, with no timestamps.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import cdkernel as cdk
from . import limits, pseudo, quadrature
from .io import csv_text, fmt_float

FIGURES = ("fig1_dn", "fig2_cdzeros", "fig3_wavefunctions", "fig4_expectation", "fig5_dispersion")
SWEEP_OUTPUTS = ("d", "d_approx_quad", "d_approx_osc", "expectation", "expectation_approx",
                 "var_trunc", "var_full", "var_full_approx")


@dataclass(frozen=True)
class SweepConfig:
    cap: int
    lambda_min: float
    lambda_max: float
    points: int
    outputs: frozenset = field(default_factory=lambda: frozenset(SWEEP_OUTPUTS))

    def __post_init__(self):
        if not self.lambda_min < self.lambda_max:
            raise ValueError("lambda_min must be below lambda_max")
        if self.points < 2:
            raise ValueError("points must be >= 2")
        unknown = set(self.outputs) - set(SWEEP_OUTPUTS)
        if unknown:
            raise ValueError(f"unknown outputs: {sorted(unknown)}")

    def grid(self) -> np.ndarray:
        return np.linspace(self.lambda_min, self.lambda_max, self.points)


@dataclass(frozen=True)
class FigureSpec:
    figure_id: str
    caps: tuple[int, ...]
    lambdas: tuple[float, ...] = ()
    sweep: SweepConfig | None = None

    def __post_init__(self):
        if self.figure_id not in FIGURES:
            raise ValueError(f"unknown figure {self.figure_id!r}")
        if not self.caps:
            raise ValueError("at least one cap is required")


# Caption parameters of the published figures.
FIG3_LAMBDAS = (-5.0, -2.0, 0.0, 2.0, 5.0, 10.0)
FIG2_CAPS = (5, 10, 25, 50)
FIG2_BEST_EFFORT = (150, 500)


def preset(figure_id: str, cap: int | None = None, lambdas=None, points: int = 1601,
           best_effort: bool = False) -> FigureSpec:
    if figure_id == "fig1_dn":
        c = cap if cap is not None else 15
        return FigureSpec(figure_id, (c,), sweep=SweepConfig(c, -8.0, 8.0, points))
    if figure_id == "fig2_cdzeros":
        caps = (cap,) if cap is not None else FIG2_CAPS + (FIG2_BEST_EFFORT if best_effort else ())
        return FigureSpec(figure_id, caps)
    if figure_id == "fig3_wavefunctions":
        c = cap if cap is not None else 16
        lams = tuple(lambdas) if lambdas else FIG3_LAMBDAS
        return FigureSpec(figure_id, (c,), lams, SweepConfig(c, -10.0, 10.0, 2001))
    if figure_id == "fig4_expectation":
        c = cap if cap is not None else 16
        return FigureSpec(figure_id, (c,), sweep=SweepConfig(c, -8.0, 8.0, points))
    if figure_id == "fig5_dispersion":
        c = cap if cap is not None else 8
        return FigureSpec(figure_id, (c,), sweep=SweepConfig(c, -8.0, 8.0, points))
    raise ValueError(f"unknown figure {figure_id!r}")


# -- output helpers -----------------------------------------------------------

def _write(path: Path, text: str) -> Path:
    try:
        path.write_text(text, encoding="utf-8", newline="")
    except OSError as exc:
        raise SystemExit(f"error: cannot write {path}: {exc.strerror}") from exc
    return path


def _split(grid: np.ndarray, cap: int):
    edge = math.sqrt(2 * cap + 1)
    return grid[np.abs(grid) < edge], grid[np.abs(grid) > edge]


def _approx_rows(lam, approx):
    return zip(lam.tolist(), np.atleast_1d(approx.value).tolist(),
               np.atleast_1d(approx.pole_flag).tolist())


# -- figures ------------------------------------------------------------------

def _fig1(spec: FigureSpec, outdir: Path, **_) -> list[Path]:
    cap = spec.caps[0]
    grid = spec.sweep.grid()
    inner, outer = _split(grid, cap)
    files = [
        _write(outdir / f"fig1_dn_N{cap}_exact.csv",
               csv_text(("lambda", "d"), zip(grid.tolist(), pseudo.d_measure(grid, cap).tolist()))),
        _write(outdir / f"fig1_dn_N{cap}_quadratic.csv",
               csv_text(("lambda", "d_approx"),
                        zip(outer.tolist(), np.atleast_1d(
                            pseudo.d_approx_quadratic(outer, cap)).tolist()) if outer.size else [])),
        _write(outdir / f"fig1_dn_N{cap}_oscillatory.csv",
               csv_text(("lambda", "d_approx", "pole_flag"),
                        _approx_rows(inner, pseudo.d_approx_oscillatory(inner, cap)))),
    ]
    return files


def _fig2(spec: FigureSpec, outdir: Path, **_) -> list[Path]:
    files = []
    for cap in spec.caps:
        best = cap not in FIG2_CAPS and cap > 100
        rs = cdk.complex_zeros(cap, best_effort=best)
        files.append(_write(outdir / f"fig2_cdzeros_N{cap}.csv", rs.to_csv()))
        if best:
            status = {"cap": cap, "max_residual": rs.max_residual,
                      "precision_bits": rs.precision_bits,
                      "unconverged": list(rs.unconverged)}
            files.append(_write(outdir / f"fig2_cdzeros_N{cap}.status.json",
                                json.dumps(status, sort_keys=True) + "\n"))
    return files


def _wave_csv(xi, lam, cap):
    return csv_text(("xi", "psi"), zip(xi.tolist(), pseudo.wavefunction(xi, lam, cap).tolist()))


def _fig3(spec: FigureSpec, outdir: Path, animate: bool = False, **_) -> list[Path]:
    cap = spec.caps[0]
    xi = spec.sweep.grid()
    files = [_write(outdir / f"fig3_wavefunction_N{cap}_lambda{fmt_float(lam)}.csv",
                    _wave_csv(xi, lam, cap)) for lam in spec.lambdas]
    if animate:
        frames = np.round(np.linspace(-10.0, 10.0, 201), 12)
        for i, lam in enumerate(frames):
            files.append(_write(outdir / f"fig3_frame_N{cap}_{i:04d}.csv",
                                _wave_csv(xi, float(lam), cap)))
        files.append(_write(outdir / f"fig3_frames_N{cap}.csv",
                            csv_text(("frame", "lambda"), enumerate(frames.tolist()))))
    return files


def _fig4(spec: FigureSpec, outdir: Path, **_) -> list[Path]:
    cap = spec.caps[0]
    grid = spec.sweep.grid()
    inner, outer = _split(grid, cap)
    printed = pseudo.expectation_approx(inner, cap, "oscillatory")
    corrected = pseudo.expectation_approx(inner, cap, "oscillatory", printed=False)
    osc_rows = zip(inner.tolist(), np.atleast_1d(printed.value).tolist(),
                   np.atleast_1d(corrected.value).tolist(),
                   np.atleast_1d(printed.pole_flag).tolist())
    quad = (pseudo.expectation_approx(outer, cap, "quadratic").value if outer.size else [])
    return [
        _write(outdir / f"fig4_expectation_N{cap}_exact.csv",
               csv_text(("lambda", "expectation"),
                        zip(grid.tolist(), pseudo.expectation_xi(grid, cap).tolist()))),
        _write(outdir / f"fig4_expectation_N{cap}_quadratic.csv",
               csv_text(("lambda", "expectation_approx"),
                        zip(outer.tolist(), np.atleast_1d(quad).tolist()))),
        _write(outdir / f"fig4_expectation_N{cap}_oscillatory.csv",
               csv_text(("lambda", "printed", "sign_corrected", "pole_flag"), osc_rows)),
    ]


def _fig5(spec: FigureSpec, outdir: Path, **_) -> list[Path]:
    cap = spec.caps[0]
    grid = spec.sweep.grid()
    inner, outer = _split(grid, cap)
    files = [_write(outdir / f"fig5_dispersion_N{cap}_exact.csv",
                    pseudo.moment_profile_csv(grid, cap))]
    for kind, fn in (("truncated", pseudo.variance_truncated_approx),
                     ("full", pseudo.variance_full_approx)):
        quad = fn(outer, cap, "quadratic").value if outer.size else []
        files.append(_write(outdir / f"fig5_dispersion_N{cap}_{kind}_quadratic.csv",
                            csv_text(("lambda", "approx"),
                                     zip(outer.tolist(), np.atleast_1d(quad).tolist()))))
        files.append(_write(outdir / f"fig5_dispersion_N{cap}_{kind}_oscillatory.csv",
                            csv_text(("lambda", "approx", "pole_flag"),
                                     _approx_rows(inner, fn(inner, cap, "oscillatory")))))
    return files


_FIGURE_WRITERS = {"fig1_dn": _fig1, "fig2_cdzeros": _fig2, "fig3_wavefunctions": _fig3,
                   "fig4_expectation": _fig4, "fig5_dispersion": _fig5}


def cmd_figure(spec: FigureSpec, outdir: Path, animate: bool = False) -> list[Path]:
    outdir.mkdir(parents=True, exist_ok=True)
    return _FIGURE_WRITERS[spec.figure_id](spec, outdir, animate=animate)


# -- other commands -----------------------------------------------------------

def cmd_spectrum(cap: int, beta: float = 0.0, fmt: str = "json") -> str:
    q = quadrature.build(cap, beta)
    eig = quadrature.diagonalize(q)
    if fmt == "csv":
        return csv_text(("index", "eigenvalue"), enumerate(eig.eigenvalues.tolist()))
    record = json.loads(eig.to_json())
    record["beta"] = float(beta)
    if beta != 0.0:
        # eigenvectors of the rotated quadrature are U(beta) v
        vecs = q.phase_factors[:, None] * eig.eigenvectors
        record["eigenvectors"] = [[[float(z.real), float(z.imag)] for z in row] for row in vecs]
        record["eigenvector_format"] = "rows of [re, im]"
    return json.dumps(record) + "\n"


def cmd_limit(target: float, epsilon: float, n0: int, mode: str = "quadrature",
              theta0: float = 0.0) -> str:
    if mode == "phase":
        cert = limits.phase_limit_density(target, epsilon, n0, theta0)
    else:
        cert = limits.find_near_eigenvalue(limits.LimitQuery(target, epsilon, n0))
    return cert.to_json() + "\n"


def cmd_validate(suite: str, perturb: float = 0.0, stream=None) -> int:
    from .acceptance import run_suite

    stream = stream or sys.stdout

    results = run_suite(suite, perturb=perturb)
    for r in results:
        print(r.line(), file=stream)
    report = [{"criterion": r.number, "name": r.name, "passed": r.passed,
               "seconds": round(r.seconds, 3), "detail": r.detail} for r in results]
    print(json.dumps({"suite": suite, "passed": all(r.passed for r in results),
                      "results": report}), file=stream)
    return 0 if all(r.passed for r in results) else 1


# -- argument parsing ---------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fockquad", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", help="eigenvalues and eigenvectors of the truncated quadrature")
    p.add_argument("--cap", type=int, required=True)
    p.add_argument("--beta", type=float, default=0.0)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--output", type=Path)

    p = sub.add_parser("figure", help="write the data behind one of the figures as CSV")
    p.add_argument("figure_id", choices=FIGURES)
    p.add_argument("--outdir", type=Path, default=Path("."))
    p.add_argument("--cap", type=int)
    p.add_argument("--lambda", dest="lambdas", type=float, action="append")
    p.add_argument("--points", type=int, default=1601)
    p.add_argument("--animate", action="store_true")
    p.add_argument("--best-effort", action="store_true")

    p = sub.add_parser("limit", help="certificate that a target is close to some eigenvalue")
    p.add_argument("--target", type=float, required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--n0", type=int, default=0)
    p.add_argument("--mode", choices=("quadrature", "phase"), default="quadrature")
    p.add_argument("--theta0", type=float, default=0.0)

    p = sub.add_parser("validate", help="run the acceptance suite")
    p.add_argument("--suite", choices=("fast", "full"), default="fast")
    p.add_argument("--perturb", type=float, default=0.0, help=argparse.SUPPRESS)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "spectrum":
            text = cmd_spectrum(args.cap, args.beta, args.format)
            if args.output:
                _write(args.output, text)
            else:
                sys.stdout.write(text)
            return 0
        if args.command == "figure":
            spec = preset(args.figure_id, args.cap, args.lambdas, args.points, args.best_effort)
            for path in cmd_figure(spec, args.outdir, args.animate):
                print(path)
            return 0
        if args.command == "limit":
            sys.stdout.write(cmd_limit(args.target, args.epsilon, args.n0, args.mode, args.theta0))
            return 0
        if args.command == "validate":
            return cmd_validate(args.suite, args.perturb)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 2


if __name__ == "__main__":
    raise SystemExit(main())
