"""Command line interface: fit, eval, convergence, metrics.

Exit codes: 0 success, 2 for I/O or parse failures, 3 for violated
preconditions (bad degrees, out-of-domain queries, dimension mismatches).
"""

from __future__ import annotations

import argparse
import json
import statistics
import sys
import time

import numpy as np

from . import functions
from .bspline import SplineCurve, SplineSurface, load_spline, save_spline
from .gridfile import GridFile, GridFormatError, read_grid
from .qi1d import HermiteData, default_fd_order, estimate_order, qi_approx, qi_hermite
from .tensor import GridSample2D, GridSample3D, qi2d_approx, qi2d_hermite, qi3d_approx

EXIT_OK = 0
EXIT_IO = 2
EXIT_CONSTRAINT = 3


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _fmt(v: float) -> str:
    return repr(float(v))


def _parse_int_list(text: str, what: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t != ""]
    except ValueError as exc:
        raise CliError(EXIT_IO, f"bad {what} list {text!r}: {exc}") from exc


def _periodic_flags(arg: str | None, dim: int) -> list[bool]:
    flags = [False] * dim
    if arg:
        for tok in _parse_int_list(arg, "periodic axis"):
            if not 0 <= tok < dim:
                raise CliError(EXIT_CONSTRAINT,
                               f"periodic axis {tok} out of range for {dim}D data")
            flags[tok] = True
    return flags


# ---------------------------------------------------------------------------
# fit
# ---------------------------------------------------------------------------

def _fit_from_grid(grid: GridFile, degrees: list[int], orders: list[int | None],
                   hermite: bool, periodic: list[bool]):
    dim = grid.dim
    periods = [p if flag else None for p, flag in zip(grid.periods, periodic)]
    for k, flag in enumerate(periodic):
        if flag and periods[k] is None:
            raise CliError(EXIT_CONSTRAINT,
                           f"axis {k} marked periodic but the grid has no period")
    if dim == 1:
        (x,) = grid.axes
        f = grid.fields["f"]
        if hermite:
            if "fp" not in grid.fields:
                raise CliError(EXIT_CONSTRAINT,
                               "--hermite needs an 'fp' derivative block in the grid")
            return qi_hermite(HermiteData(x, f, grid.fields["fp"]), degrees[0],
                              periodic=periodic[0], period=periods[0])
        return qi_approx(x, f, degrees[0], orders[0],
                         periodic=periodic[0], period=periods[0])
    if dim == 2:
        g = GridSample2D(grid.axes[0], grid.axes[1], grid.fields["f"],
                         grid.fields.get("fx"), grid.fields.get("fy"),
                         grid.fields.get("fxy"))
        if hermite:
            if not g.has_derivatives:
                raise CliError(EXIT_CONSTRAINT,
                               "--hermite needs fx, fy, fxy blocks in the grid")
            return qi2d_hermite(g, degrees[0], degrees[1],
                                periodic=(periodic[0], periodic[1]),
                                periods=(periods[0], periods[1]))
        return qi2d_approx(g, degrees[0], degrees[1], orders[0], orders[1],
                           periodic=(periodic[0], periodic[1]),
                           periods=(periods[0], periods[1]))
    g3 = GridSample3D(grid.axes[0], grid.axes[1], grid.axes[2], grid.fields["f"])
    if hermite:
        raise CliError(EXIT_CONSTRAINT,
                       "3D fitting supports the approximate variant only")
    return qi3d_approx(g3, tuple(degrees), tuple(orders),
                       periodic=tuple(periodic), periods=tuple(periods))


def cmd_fit(args) -> int:
    try:
        grid = read_grid(args.input)
    except (OSError, GridFormatError) as exc:
        raise CliError(EXIT_IO, f"cannot read grid: {exc}") from exc
    dim = grid.dim
    degrees = _parse_int_list(args.degree, "degree")
    if len(degrees) == 1:
        degrees *= dim
    if len(degrees) != dim:
        raise CliError(EXIT_CONSTRAINT,
                       f"got {len(degrees)} degrees for {dim}D data")
    orders: list[int | None] = [None] * dim
    if args.fd_order:
        parsed = _parse_int_list(args.fd_order, "fd-order")
        if len(parsed) == 1:
            parsed *= dim
        if len(parsed) != dim:
            raise CliError(EXIT_CONSTRAINT,
                           f"got {len(parsed)} fd-orders for {dim}D data")
        orders = list(parsed)
    periodic = _periodic_flags(args.periodic, dim)
    t0 = time.perf_counter()
    try:
        spline = _fit_from_grid(grid, degrees, orders, args.hermite, periodic)
    except ValueError as exc:
        raise CliError(EXIT_CONSTRAINT, str(exc)) from exc
    dt = time.perf_counter() - t0
    try:
        save_spline(spline, args.output)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write spline: {exc}") from exc
    if isinstance(spline, SplineCurve):
        knots = [spline.kv.knots.size]
        shape = list(np.atleast_2d(spline.coefficients.T).T.shape)
    elif isinstance(spline, SplineSurface):
        knots = [spline.kvx.knots.size, spline.kvy.knots.size]
        shape = list(spline.coefficients.shape)
    else:
        knots = [spline.kvx.knots.size, spline.kvy.knots.size, spline.kvz.knots.size]
        shape = list(spline.coefficients.shape)
    print(f"knots: {knots}  coefficients: {shape}  fit_seconds: {dt:.6f}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# eval
# ---------------------------------------------------------------------------

def _parse_grid_spec(spec: str) -> np.ndarray:
    parts = spec.split(":")
    if len(parts) != 3:
        raise CliError(EXIT_IO, f"grid spec must be start:stop:num, got {spec!r}")
    try:
        a, b, num = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise CliError(EXIT_IO, f"bad grid spec {spec!r}: {exc}") from exc
    if num < 1:
        raise CliError(EXIT_CONSTRAINT, "grid spec needs num >= 1")
    return np.linspace(a, b, num)


def _spline_dim(spline) -> int:
    if isinstance(spline, SplineCurve):
        return 1
    if isinstance(spline, SplineSurface):
        return 2
    return 3


def _spline_domains(spline):
    if isinstance(spline, SplineCurve):
        return [spline.kv.domain]
    if isinstance(spline, SplineSurface):
        return [spline.kvx.domain, spline.kvy.domain]
    return [spline.kvx.domain, spline.kvy.domain, spline.kvz.domain]


def _kvs(spline):
    if isinstance(spline, SplineCurve):
        return [spline.kv]
    if isinstance(spline, SplineSurface):
        return [spline.kvx, spline.kvy]
    return [spline.kvx, spline.kvy, spline.kvz]


def cmd_eval(args) -> int:
    try:
        spline = load_spline(args.spline)
    except (OSError, json.JSONDecodeError, ValueError) as exc:
        raise CliError(EXIT_IO, f"cannot load spline: {exc}") from exc
    dim = _spline_dim(spline)
    deriv = [0] * dim
    if args.deriv:
        deriv = _parse_int_list(args.deriv, "deriv")
        if len(deriv) == 1:
            deriv *= dim
        if len(deriv) != dim or any(r < 0 for r in deriv):
            raise CliError(EXIT_CONSTRAINT, f"bad derivative orders {args.deriv!r}")

    if args.grid:
        specs = args.grid.split(";") if ";" in args.grid else args.grid.split("/")
        if len(specs) == 1 and dim > 1:
            specs = specs * dim
        if len(specs) != dim:
            raise CliError(EXIT_CONSTRAINT,
                           f"got {len(specs)} grid specs for a {dim}D spline")
        axes = [_parse_grid_spec(s) for s in specs]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=-1)
    elif args.points:
        try:
            pts = np.loadtxt(args.points, delimiter=",", ndmin=2)
        except (OSError, ValueError) as exc:
            raise CliError(EXIT_IO, f"cannot read points: {exc}") from exc
        if pts.shape[1] != dim:
            raise CliError(EXIT_CONSTRAINT,
                           f"points have {pts.shape[1]} columns, spline is {dim}D")
    else:
        raise CliError(EXIT_CONSTRAINT, "eval needs --grid or --points")

    domains = _spline_domains(spline)
    kvs = _kvs(spline)
    bad = []
    for i, row in enumerate(pts):
        for k, (lo, hi) in enumerate(domains):
            if kvs[k].periodic:
                continue
            tol = 1e-12 * max(abs(lo), abs(hi), hi - lo)
            if row[k] < lo - tol or row[k] > hi + tol:
                bad.append((i, row))
                break
    if bad:
        listing = "; ".join(f"#{i}: {tuple(float(v) for v in r)}" for i, r in bad[:10])
        raise CliError(EXIT_CONSTRAINT,
                       f"{len(bad)} query points outside the spline domain: {listing}")

    if isinstance(spline, SplineCurve):
        vals = spline.eval(pts[:, 0], deriv[0])
        vals2d = vals[:, None] if vals.ndim == 1 else vals
    elif isinstance(spline, SplineSurface):
        if args.grid:
            vals2d = spline.eval_grid(axes[0], axes[1], deriv[0], deriv[1]).reshape(-1, 1)
        else:
            vals2d = np.array([[spline.eval(x, y, deriv[0], deriv[1])]
                               for x, y in pts])
    else:
        if args.grid:
            vals2d = spline.eval_grid(axes[0], axes[1], axes[2], tuple(deriv)).reshape(-1, 1)
        else:
            vals2d = np.array([[spline.eval(x, y, z, tuple(deriv))]
                               for x, y, z in pts])

    out = sys.stdout if args.output is None else open(args.output, "w", encoding="utf-8")
    try:
        for row, v in zip(pts, vals2d):
            cols = [_fmt(c) for c in row] + [_fmt(c) for c in v]
            out.write(",".join(cols) + "\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


# ---------------------------------------------------------------------------
# convergence
# ---------------------------------------------------------------------------

def _convergence_axes(spec, N, nonuniform, grading):
    axes = []
    for lo, hi in spec["domain"]:
        if nonuniform:
            axes.append(functions.graded_mesh(lo, hi, N, grading))
        else:
            axes.append(np.linspace(lo, hi, N + 1))
    return axes


def _fit_builtin(spec, axes, degree, fd_order, hermite):
    dim = spec["dim"]
    if dim == 1:
        x = axes[0]
        f = spec["f"](x)
        if hermite:
            return qi_hermite(HermiteData(x, f, spec["fprime"](x)), degree)
        return qi_approx(x, f, degree, fd_order)
    if dim == 2:
        X, Y = axes[0][:, None], axes[1][None, :]
        g = GridSample2D(axes[0], axes[1], spec["f"](X, Y),
                         spec["fx"](X, Y) + 0 * X * Y if hermite else None,
                         spec["fy"](X, Y) + 0 * X * Y if hermite else None,
                         spec["fxy"](X, Y) + 0 * X * Y if hermite else None)
        if hermite:
            return qi2d_hermite(g, degree, degree)
        return qi2d_approx(g, degree, degree, fd_order, fd_order)
    X = axes[0][:, None, None]
    Y = axes[1][None, :, None]
    Z = axes[2][None, None, :]
    if hermite:
        raise CliError(EXIT_CONSTRAINT,
                       "3D fitting supports the approximate variant only")
    g3 = GridSample3D(axes[0], axes[1], axes[2], spec["f"](X, Y, Z))
    return qi3d_approx(g3, (degree,) * 3, (fd_order,) * 3)


def _builtin_error(spec, spline) -> float:
    dim = spec["dim"]
    if dim == 1:
        xs = np.linspace(*spec["domain"][0], 1000)
        return float(np.max(np.abs(spline.eval(xs) - spec["f"](xs))))
    if dim == 2:
        xs = np.linspace(*spec["domain"][0], 101)
        ys = np.linspace(*spec["domain"][1], 101)
        ref = spec["f"](xs[:, None], ys[None, :])
        return float(np.max(np.abs(spline.eval_grid(xs, ys) - ref)))
    xs = np.linspace(*spec["domain"][0], 101)
    ys = np.linspace(*spec["domain"][1], 101)
    zs = np.linspace(*spec["domain"][2], 101)
    ref = spec["f"](xs[:, None, None], ys[None, :, None], zs[None, None, :])
    return float(np.max(np.abs(spline.eval_grid(xs, ys, zs) - ref)))


def cmd_convergence(args) -> int:
    if args.function not in functions.BUILTINS:
        raise CliError(EXIT_CONSTRAINT,
                       f"unknown builtin {args.function!r}; "
                       f"choose from {sorted(functions.BUILTINS)}")
    spec = functions.BUILTINS[args.function]
    Ns = _parse_int_list(args.N, "N")
    if not Ns or any(n < 2 for n in Ns):
        raise CliError(EXIT_CONSTRAINT, "N list must contain integers >= 2")
    degree = args.degree
    fd_order = args.fd_order if args.fd_order else default_fd_order(degree)

    rows = []
    errors = []
    for N in Ns:
        axes = _convergence_axes(spec, N, args.nonuniform, args.grading)
        times = []
        spline = None
        for _ in range(max(1, args.repeats)):
            t0 = time.perf_counter()
            try:
                spline = _fit_builtin(spec, axes, degree, fd_order, args.hermite)
            except ValueError as exc:
                raise CliError(EXIT_CONSTRAINT, str(exc)) from exc
            times.append(time.perf_counter() - t0)
        err = _builtin_error(spec, spline)
        errors.append(err)
        rows.append((N, err, statistics.median(times)))

    orders = [float("nan")] + estimate_order(errors, Ns)
    out = sys.stdout if args.output is None else open(args.output, "w", encoding="utf-8")
    try:
        out.write("N,error,order,time\n")
        for (N, err, dt), order in zip(rows, orders):
            ostr = "" if np.isnan(order) else _fmt(order)
            out.write(f"{N},{_fmt(err)},{ostr},{_fmt(dt)}\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------

def cmd_metrics(args) -> int:
    try:
        spline = load_spline(args.spline)
    except (OSError, json.JSONDecodeError, ValueError) as exc:
        raise CliError(EXIT_IO, f"cannot load spline: {exc}") from exc
    try:
        grid = read_grid(args.reference)
    except (OSError, GridFormatError) as exc:
        raise CliError(EXIT_IO, f"cannot read grid: {exc}") from exc
    dim = _spline_dim(spline)
    if grid.dim != dim:
        raise CliError(EXIT_CONSTRAINT,
                       f"reference grid is {grid.dim}D but the spline is {dim}D")
    domains = _spline_domains(spline)
    kvs = _kvs(spline)
    for k, a in enumerate(grid.axes):
        lo, hi = domains[k]
        tol = 1e-12 * max(abs(lo), abs(hi), hi - lo)
        if not kvs[k].periodic and (a[0] < lo - tol or a[-1] > hi + tol):
            raise CliError(EXIT_CONSTRAINT,
                           f"reference axis {k} leaves the spline domain [{lo}, {hi}]")
    ref = grid.fields["f"]
    try:
        if dim == 1:
            vals = spline.eval(grid.axes[0])
        elif dim == 2:
            vals = spline.eval_grid(grid.axes[0], grid.axes[1])
        else:
            vals = spline.eval_grid(grid.axes[0], grid.axes[1], grid.axes[2])
    except ValueError as exc:
        raise CliError(EXIT_CONSTRAINT, str(exc)) from exc
    resid = vals - ref
    max_err = float(np.max(np.abs(resid)))
    rmse = float(np.sqrt(np.mean(resid ** 2)))
    rng = float(np.max(ref) - np.min(ref))
    nrmse = rmse / rng if rng > 0 else None
    payload = {"max_err": max_err, "rmse": rmse,
               "nrmse": nrmse if nrmse is not None else "undefined (zero range)"}
    print(json.dumps(payload))
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="qispline",
        description="Fit, evaluate and study spline quasi-interpolants on grids.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a spline to a grid file")
    p.add_argument("input", help="grid file path")
    p.add_argument("-o", "--output", required=True, help="output spline JSON path")
    p.add_argument("--degree", required=True,
                   help="spline degree, or comma list per axis")
    p.add_argument("--fd-order", default=None,
                   help="difference order(s) for the approximate variant")
    p.add_argument("--hermite", action="store_true",
                   help="use the derivative blocks stored in the grid")
    p.add_argument("--periodic", default=None,
                   help="comma list of periodic axis indices (0-based)")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("eval", help="evaluate a spline JSON file")
    p.add_argument("spline", help="spline JSON path")
    p.add_argument("--grid", default=None,
                   help="start:stop:num per axis, separated by ';'")
    p.add_argument("--points", default=None, help="CSV file of query points")
    p.add_argument("--deriv", default=None, help="derivative order(s)")
    p.add_argument("-o", "--output", default=None, help="output CSV (default stdout)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("convergence", help="error table for a builtin function")
    p.add_argument("function", help=f"one of {sorted(functions.BUILTINS)}")
    p.add_argument("--degree", type=int, required=True)
    p.add_argument("--fd-order", type=int, default=None)
    p.add_argument("--N", required=True, help="comma list of span counts")
    p.add_argument("--hermite", action="store_true",
                   help="use exact derivatives instead of differences")
    p.add_argument("--nonuniform", action="store_true",
                   help="use a boundary-graded mesh")
    p.add_argument("--grading", type=float, default=3.0,
                   help="grading strength for --nonuniform")
    p.add_argument("--repeats", type=int, default=1,
                   help="fit repetitions; the median time is reported")
    p.add_argument("-o", "--output", default=None, help="output CSV (default stdout)")
    p.set_defaults(func=cmd_convergence)

    p = sub.add_parser("metrics", help="error metrics of a spline vs a reference grid")
    p.add_argument("spline", help="spline JSON path")
    p.add_argument("reference", help="reference grid file")
    p.set_defaults(func=cmd_metrics)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
