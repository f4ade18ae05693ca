"""Command-line experiment runner.

One run builds the mesh, the spline space and the constraints for a benchmark
problem, calls one of the three drivers and writes a CSV row. Sweeps repeat a
run along one axis (``d``, ``h`` or ``epsilon``).

    ma-spline --test 1 --method newton --degree 5 --m 4 --out run.csv
    ma-spline --test 1 --method vm --degree 5 --m 4 --sweep epsilon=1e-3,1e-5,1e-7

Exit codes: 0 converged, 2 not converged, 1 usage or IO error.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import logging
import math
import os
import sys
from dataclasses import dataclass, replace
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import analysis
from .mesh import TriMesh, load_mesh, refine_uniform
from .problems import TestCase, get_test
from .saddle import ALParams
from .solvers import NewtonParams, ProblemSpec, SolveReport, bfo_solve, newton_solve, vm_solve
from .spline_space import SplineFunction, SplineSpace

log = logging.getLogger(__name__)

COLUMNS = ["test", "method", "d", "r", "h", "epsilon", "n_it", "l2", "h1", "h2", "residual", "converged", "wall_ms"]
METHODS = ("newton", "bfo", "vm")
AXES = ("d", "h", "epsilon")
EXIT_OK, EXIT_USAGE, EXIT_NOT_CONVERGED = 0, 1, 2


class ConfigError(ValueError):
    """Invalid run configuration."""


@dataclass
class RunConfig:
    """One experiment. ``m`` is the number of square subdivisions per side on
    the unit square and the number of uniform refinements for mesh-file tests.
    ``max_iters=None`` keeps the driver default; ``f_load=None`` uses the
    test's recommended load mode."""

    test: int = 1
    method: str = "newton"
    d: int = 5
    r: int = 1
    m: int | None = None
    mesh_path: str | None = None
    epsilon: float = 0.0
    mu: float = 1e-5
    tau: float = 1.0
    bfo_constant: float = 2.0
    branch: str = "convex"
    tol_residual: float | None = None
    max_iters: int | None = None
    f_load: str | None = None
    out: str | None = None
    grid: tuple[int, int] | None = None
    grid_out: str | None = None

    def validate(self) -> "RunConfig":
        if self.test not in (1, 2, 3, 4):
            raise ConfigError(f"--test must be 1..4, got {self.test}")
        if self.method not in METHODS:
            raise ConfigError(f"--method must be one of {METHODS}, got {self.method!r}")
        if self.method == "vm" and self.epsilon == 0.0:
            raise ConfigError("method vm requires epsilon != 0")
        if self.method == "newton" and self.epsilon != 0.0:
            raise ConfigError("method newton requires epsilon = 0")
        if self.d < 2:
            raise ConfigError("the drivers need degree d >= 2")
        if not 0 <= self.r < self.d:
            raise ConfigError(f"smoothness r={self.r} must satisfy 0 <= r < d")
        if self.m is not None and self.m < (1 if self.mesh_path is None and self.test != 4 else 0):
            raise ConfigError(f"invalid --m {self.m}")
        if self.branch not in ("convex", "concave"):
            raise ConfigError(f"--branch must be convex or concave, got {self.branch!r}")
        if self.bfo_constant <= 0:
            raise ConfigError("--bfo-constant must be positive")
        if self.mu <= 0 or self.tau < 1:
            raise ConfigError("need mu > 0 and tau >= 1")
        if self.max_iters is not None and self.max_iters < 1:
            raise ConfigError("--max-iters must be >= 1")
        if self.f_load not in (None, "quadrature", "interpolant"):
            raise ConfigError(f"unknown f_load {self.f_load!r}")
        if self.grid is not None and (len(self.grid) != 2 or min(self.grid) < 2):
            raise ConfigError("--grid needs NX,NY with both >= 2")
        return self


def build_mesh(config: RunConfig, case: TestCase) -> TriMesh:
    if config.mesh_path is not None:
        mesh = load_mesh(config.mesh_path)
        for _ in range(config.m or 0):
            mesh = refine_uniform(mesh)
        return mesh
    return case.mesh(config.m)


def mesh_h(mesh: TriMesh) -> float:
    return mesh.label_h if mesh.label_h is not None else mesh.h


def solve(config: RunConfig):
    """Run the configured driver; returns ``(u, report, mesh)``."""
    config.validate()
    case = get_test(config.test, config.branch)
    mesh = build_mesh(config, case)
    space = SplineSpace(mesh, config.d, config.r)
    spec = ProblemSpec(case.f, case.g, mesh, case.exact, config.branch, config.f_load or case.f_load)
    params = NewtonParams(
        tau=config.tau,
        tol_residual=config.tol_residual,
        epsilon=config.epsilon,
        bfo_constant=config.bfo_constant,
        al=ALParams(mu=config.mu),
    )
    if config.max_iters is not None:
        params = replace(params, max_iters=config.max_iters, bfo_max_iters=config.max_iters)
    driver = {"newton": newton_solve, "bfo": bfo_solve, "vm": vm_solve}[config.method]
    u, report = driver(spec, space, params)
    return u, report, mesh


def _fmt(x) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return f"{x:.6e}"


def report_row(config: RunConfig, report: SolveReport, mesh: TriMesh) -> dict:
    e = report.errors
    return {
        "test": config.test,
        "method": config.method,
        "d": config.d,
        "r": config.r,
        "h": f"{mesh_h(mesh):.6g}",
        "epsilon": f"{config.epsilon:.3g}",
        "n_it": report.iterations,
        "l2": _fmt(e.l2 if e else None),
        "h1": _fmt(e.h1 if e else None),
        "h2": _fmt(e.h2 if e else None),
        "residual": _fmt(report.residual),
        "converged": int(report.converged),
        "wall_ms": f"{1000 * report.wall_time:.1f}",
    }


def write_csv(rows: list, path) -> None:
    path = Path(path)
    if path.parent != Path("."):
        path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=COLUMNS)
        writer.writeheader()
        writer.writerows(rows)


def export_grid(u: SplineFunction, nx: int, ny: int, path) -> int:
    """Write ``x,y,u,u_x,u_y`` on an ``nx x ny`` grid over the mesh bounding
    box; points outside the domain are omitted. Returns the row count."""
    V = u.space.mesh.vertices
    (x0, y0), (x1, y1) = V.min(axis=0), V.max(axis=0)
    X, Y = np.meshgrid(np.linspace(x0, x1, nx), np.linspace(y0, y1, ny))
    pts = np.column_stack([X.ravel(), Y.ravel()])
    tri, _ = u.locate(pts)
    pts = pts[tri >= 0]
    rows = np.zeros((0, 5))
    if len(pts):
        val, grad = u.eval(pts, order=1)
        rows = np.column_stack([pts, val, grad])
    header = "x,y,u,u_x,u_y"
    np.savetxt(path, rows, delimiter=",", header=header, comments="", fmt="%.12e")
    return len(rows)


def run(config: RunConfig):
    """Solve, then write the CSV row and the optional grid samples.

    Returns ``(report, row, u)``; partial results are written even when the
    driver does not converge.
    """
    u, report, mesh = solve(config)
    row = report_row(config, report, mesh)
    if config.out:
        write_csv([row], config.out)
    if config.grid_out:
        nx, ny = config.grid or (101, 101)
        with np.errstate(all="ignore"):
            export_grid(u, nx, ny, config.grid_out)
    return report, row, u


def _axis_value(config: RunConfig, axis: str, value) -> RunConfig:
    if axis == "d":
        return replace(config, d=int(value))
    if axis == "epsilon":
        return replace(config, epsilon=float(value))
    # h: square tests take m = 1/h; mesh tests refine the base mesh
    h = float(value)
    if config.mesh_path is None and config.test != 4:
        return replace(config, m=int(round(1.0 / h)))
    base = build_mesh(replace(config, m=0), get_test(config.test, config.branch))
    return replace(config, m=max(0, int(round(math.log2(mesh_h(base) / h)))))


def sweep(template: RunConfig, axis: str, values) -> list:
    """One run per value; returns CSV rows. For ``axis='h'`` with an exact
    solution an ``order`` row carries the observed L2/H1/H2 orders."""
    if axis not in AXES:
        raise ConfigError(f"sweep axis must be one of {AXES}, got {axis!r}")
    rows, results = [], []
    for value in values:
        config = _axis_value(template, axis, value)
        try:
            report, row, _ = run(replace(config, out=None, grid_out=None))
        except (ValueError, ArithmeticError, RuntimeError) as exc:
            log.error("run %s=%s failed: %s", axis, value, exc)
            row = dict.fromkeys(COLUMNS, "")
            row.update(test=config.test, method=config.method, d=config.d, r=config.r, epsilon=f"{config.epsilon:.3g}", converged=0)
            report = None
        rows.append(row)
        results.append((row, report))
    if axis == "h":
        order = _order_row(template, results)
        if order is not None:
            rows.append(order)
    if template.out:
        write_csv(rows, template.out)
    return rows


def _order_row(template: RunConfig, results) -> dict | None:
    usable = [(float(row["h"]), rep.errors) for row, rep in results if rep is not None and rep.errors is not None]
    usable = [(h, e) for h, e in usable if all(np.isfinite(e)) and min(e) > 0]
    if len(usable) < 2:
        return None
    row = dict.fromkeys(COLUMNS, "")
    row.update(test=template.test, method=template.method, d=template.d, r=template.r, h="order")
    for i, key in enumerate(("l2", "h1", "h2")):
        row[key] = f"{analysis.observed_order([(h, e[i]) for h, e in usable]):.4f}"
    return row


# --------------------------------------------------------------------------- #
# argument parsing                                                            #
# --------------------------------------------------------------------------- #


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _grid(text: str) -> tuple[int, int]:
    try:
        nx, ny = (int(v) for v in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError("expected NX,NY") from exc
    return nx, ny


def _sweep_spec(text: str):
    axis, _, values = text.partition("=")
    if axis not in AXES:
        raise argparse.ArgumentTypeError(f"axis must be one of {AXES}")
    vals = [v for v in values.split(",") if v.strip()]
    try:
        parsed = [float(Fraction(v.strip())) for v in vals]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad sweep values {values!r}") from exc
    return axis, parsed


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ma-spline", description="Spline element solvers for det D^2 u = f.")
    p.add_argument("--test", type=int, choices=(1, 2, 3, 4), default=1)
    p.add_argument("--method", choices=METHODS, default="newton")
    p.add_argument("--degree", type=int, default=5, help="polynomial degree d")
    p.add_argument("--smoothness", type=int, default=1, help="global smoothness r")
    where = p.add_mutually_exclusive_group()
    where.add_argument("--m", type=int, help="square subdivisions (h = 1/m) or refinements of a mesh file")
    where.add_argument("--mesh", help="path or stem of a .node/.ele pair")
    p.add_argument("--refine", type=int, default=None, help="uniform refinements of --mesh")
    p.add_argument("--epsilon", type=float, default=0.0)
    p.add_argument("--mu", type=float, default=1e-5)
    p.add_argument("--tau", type=float, default=1.0)
    p.add_argument("--bfo-constant", type=float, choices=(2.0, 4.0), default=2.0)
    p.add_argument("--branch", choices=("convex", "concave"), default="convex")
    p.add_argument("--tol-residual", type=float, default=None)
    p.add_argument("--max-iters", type=int, default=None)
    p.add_argument("--f-load", choices=("quadrature", "interpolant"), default=None)
    p.add_argument("--out", help="CSV output path (default: stdout)")
    p.add_argument("--grid", type=_grid, default=None, help="sample grid NX,NY")
    p.add_argument("--grid-out", help="grid sample CSV path")
    p.add_argument("--sweep", type=_sweep_spec, default=None, help="AXIS=v1,v2,... with AXIS in d, h, epsilon")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def config_from_args(args) -> RunConfig:
    m = args.m if args.mesh is None else args.refine
    return RunConfig(
        test=args.test,
        method=args.method,
        d=args.degree,
        r=args.smoothness,
        m=m,
        mesh_path=args.mesh,
        epsilon=args.epsilon,
        mu=args.mu,
        tau=args.tau,
        bfo_constant=args.bfo_constant,
        branch=args.branch,
        tol_residual=args.tol_residual,
        max_iters=args.max_iters,
        f_load=args.f_load,
        out=args.out,
        grid=args.grid,
        grid_out=args.grid_out,
    )


def _thread_limit():
    n = os.environ.get("MA_SPLINE_THREADS")
    if not n:
        return contextlib.nullcontext()
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=int(n))


def _join_negative_values(argv: list) -> list:
    # argparse takes "-1e-2" for an option; bind it to the preceding flag
    out = []
    for tok in argv:
        if out and out[-1] in ("--epsilon", "--mu", "--tau", "--tol-residual") and tok.startswith("-"):
            try:
                float(tok)
            except ValueError:
                pass
            else:
                out[-1] = f"{out[-1]}={tok}"
                continue
        out.append(tok)
    return out


def main(argv=None) -> int:
    """Entry point; returns the process exit code."""
    try:
        return _main(argv)
    except SystemExit as exc:  # usage errors and --help
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE


def _main(argv) -> int:
    parser = build_parser()
    args = parser.parse_args(_join_negative_values(sys.argv[1:] if argv is None else list(argv)))
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if args.grid_out and args.sweep:
        parser.error("--grid-out cannot be combined with --sweep")
    try:
        config = config_from_args(args)
        if args.sweep is None:
            config.validate()
        with _thread_limit():
            if args.sweep is not None:
                axis, values = args.sweep
                template = replace(config, epsilon=values[0] if axis == "epsilon" and values else config.epsilon)
                if values:
                    template.validate()
                rows = sweep(replace(template, out=None), axis, values)
                ok = all(str(r["converged"]) == "1" for r in rows if r["h"] != "order")
            else:
                report, row, _ = run(replace(config, out=None))
                rows, ok = [row], report.converged
    except ConfigError as exc:
        parser.error(str(exc))
    except (OSError, ValueError) as exc:
        print(f"ma-spline: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        if config.out:
            write_csv(rows, config.out)
        else:
            writer = csv.DictWriter(sys.stdout, fieldnames=COLUMNS, lineterminator="\n")
            writer.writeheader()
            writer.writerows(rows)
    except OSError as exc:
        print(f"ma-spline: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK if ok else EXIT_NOT_CONVERGED


if __name__ == "__main__":
    sys.exit(main())
