"""Tensor-product quasi-interpolation for gridded 2D and 3D data.

The surface and volume fits factor into independent 1D fits along each
axis.  With exact partial derivatives the two-stage Hermite pipeline is
used; with function values only, each axis contributes a single combined
operator (value weights minus derivative weights times the difference
operator), applied as an n-mode product.  Derivative data for the second
stage is obtained by differencing the first stage's coefficients, which
is algebraically identical to differencing the raw grid first but cheaper.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from .bspline import KnotVector, SplineSurface, SplineVolume, make_knots
from .finite_difference import build_gamma
from .qi1d import default_fd_order, qi_weight_matrices

Array = npt.NDArray[np.float64]


def n_mode_product(tensor, matrix, mode: int) -> Array:
    """Contract ``matrix`` with ``tensor`` along axis ``mode`` (0-based).

    Equivalent to ``A @ X_(mode)`` on the mode unfolding; for ``mode=0``
    the unfolding is a reshape view, no copy is made.
    """
    t = np.asarray(tensor, dtype=np.float64)
    A = np.asarray(matrix, dtype=np.float64)
    if not 0 <= mode < t.ndim:
        raise ValueError(f"mode {mode} out of range for a {t.ndim}-mode tensor")
    if A.ndim != 2 or A.shape[1] != t.shape[mode]:
        raise ValueError(
            f"matrix columns {A.shape} do not match tensor extent "
            f"{t.shape[mode]} along mode {mode}"
        )
    if mode == 0:
        out = A @ t.reshape(t.shape[0], -1)
        return out.reshape((A.shape[0],) + t.shape[1:])
    moved = np.moveaxis(t, mode, 0)
    out = A @ moved.reshape(moved.shape[0], -1)
    out = out.reshape((A.shape[0],) + moved.shape[1:])
    return np.moveaxis(out, 0, mode)


def _check_axis(nodes, name: str) -> Array:
    nodes = np.asarray(nodes, dtype=np.float64)
    if nodes.ndim != 1 or not np.all(np.diff(nodes) > 0):
        raise ValueError(f"{name} axis nodes must be strictly increasing")
    return nodes


@dataclass(frozen=True)
class GridSample2D:
    """Rectilinear samples F[i, j] = f(x[i], y[j]) plus optional partials."""

    x: Array
    y: Array
    f: Array
    fx: Array | None = None
    fy: Array | None = None
    fxy: Array | None = None

    def __post_init__(self) -> None:
        x = _check_axis(self.x, "x")
        y = _check_axis(self.y, "y")
        f = np.ascontiguousarray(self.f, dtype=np.float64)
        if f.shape != (x.size, y.size):
            raise ValueError(
                f"value grid shape {f.shape} does not match axes "
                f"({x.size}, {y.size}); first index is x"
            )
        ders = [self.fx, self.fy, self.fxy]
        have = [g is not None for g in ders]
        if any(have) and not all(have):
            raise ValueError("provide all of fx, fy, fxy or none of them")
        for nm, g in zip(("fx", "fy", "fxy"), ders):
            if g is not None:
                g = np.ascontiguousarray(g, dtype=np.float64)
                if g.shape != f.shape:
                    raise ValueError(f"{nm} shape {g.shape} != {f.shape}")
                object.__setattr__(self, nm, g)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "f", f)

    @property
    def has_derivatives(self) -> bool:
        return self.fx is not None


@dataclass(frozen=True)
class GridSample3D:
    """Rectilinear samples F[i, j, k] = f(x[i], y[j], z[k])."""

    x: Array
    y: Array
    z: Array
    f: Array

    def __post_init__(self) -> None:
        x = _check_axis(self.x, "x")
        y = _check_axis(self.y, "y")
        z = _check_axis(self.z, "z")
        f = np.ascontiguousarray(self.f, dtype=np.float64)
        if f.shape != (x.size, y.size, z.size):
            raise ValueError(
                f"value tensor shape {f.shape} does not match axes "
                f"({x.size}, {y.size}, {z.size})"
            )
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "f", f)


def _axis_kv(nodes: Array, degree: int, periodic: bool,
             period: float | None, name: str) -> KnotVector:
    if nodes.size - 1 < degree and not periodic:
        raise ValueError(
            f"{name} axis: need at least degree+1 = {degree + 1} nodes"
        )
    if periodic:
        if period is None:
            raise ValueError(f"{name} axis: periodic fit needs a period")
        if nodes[-1] - nodes[0] >= period:
            raise ValueError(
                f"{name} axis: periodic nodes must span less than one period"
            )
        bp = np.concatenate([nodes, [nodes[0] + period]])
        return make_knots(degree, bp, periodic=True)
    return make_knots(degree, nodes)


def qi2d_hermite(g: GridSample2D, dx: int, dy: int,
                 periodic: tuple[bool, bool] = (False, False),
                 periods: tuple[float | None, float | None] = (None, None),
                 ) -> SplineSurface:
    """Surface fit from values and exact partials fx, fy, fxy."""
    if not g.has_derivatives:
        raise ValueError("Hermite surface fit needs fx, fy and fxy grids")
    kvx = _axis_kv(g.x, dx, periodic[0], periods[0], "x")
    kvy = _axis_kv(g.y, dy, periodic[1], periods[1], "y")
    qx = qi_weight_matrices(kvx)
    qy = qi_weight_matrices(kvy)
    # stage 1: one 1D fit per y-line, then stage 2 along y
    D = qx.alpha @ g.f - qx.wmat @ g.fx
    Dp = qx.alpha @ g.fy - qx.wmat @ g.fxy
    C = D @ qy.alpha.T - Dp @ qy.wmat.T
    return SplineSurface(kvx, kvy, C)


def _combined_operator(nodes: Array, kv: KnotVector, fd_order: int) -> Array:
    """Value-to-coefficient operator folding in the derivative differences."""
    q = qi_weight_matrices(kv)
    gamma = build_gamma(nodes, fd_order, periodic=kv.periodic,
                        period=kv.period if kv.periodic else None)
    return q.alpha - q.wmat @ gamma.matrix


def qi2d_approx(g: GridSample2D, dx: int, dy: int,
                lx: int | None = None, ly: int | None = None,
                periodic: tuple[bool, bool] = (False, False),
                periods: tuple[float | None, float | None] = (None, None),
                ) -> SplineSurface:
    """Surface fit from function values only.

    x-partials are approximated by the order-``lx`` difference operator;
    the y-stage derivative input is obtained by differencing the x-stage
    coefficients, so the grid is differenced once per axis.
    """
    lx = default_fd_order(dx) if lx is None else lx
    ly = default_fd_order(dy) if ly is None else ly
    kvx = _axis_kv(g.x, dx, periodic[0], periods[0], "x")
    kvy = _axis_kv(g.y, dy, periodic[1], periods[1], "y")
    _check_approx_axis(g.x, dx, lx, periodic[0], "x")
    _check_approx_axis(g.y, dy, ly, periodic[1], "y")
    qx = qi_weight_matrices(kvx)
    qy = qi_weight_matrices(kvy)
    gx = build_gamma(g.x, lx, periodic=periodic[0],
                     period=kvx.period if periodic[0] else None)
    gy = build_gamma(g.y, ly, periodic=periodic[1],
                     period=kvy.period if periodic[1] else None)
    D = qx.alpha @ g.f - qx.wmat @ (gx.matrix @ g.f)
    Dp = D @ gy.matrix.T  # derivative of the stage-1 coefficients
    C = D @ qy.alpha.T - Dp @ qy.wmat.T
    return SplineSurface(kvx, kvy, C)


def _check_approx_axis(nodes: Array, d: int, l: int, periodic: bool,
                       name: str) -> None:
    need = max(d, l) + 1
    if nodes.size < need:
        raise ValueError(
            f"{name} axis: need at least max(degree, fd_order)+1 = {need} nodes"
        )


def qi3d_approx(g: GridSample3D, degrees: tuple[int, int, int],
                fd_orders: tuple[int | None, int | None, int | None] = (None, None, None),
                periodic: tuple[bool, bool, bool] = (False, False, False),
                periods=(None, None, None)) -> SplineVolume:
    """Volume fit from values only: one combined operator per axis,
    applied as successive n-mode products."""
    axes = (g.x, g.y, g.z)
    names = "xyz"
    kvs = []
    ops = []
    for k in range(3):
        d = degrees[k]
        l = default_fd_order(d) if fd_orders[k] is None else fd_orders[k]
        _check_approx_axis(axes[k], d, l, periodic[k], names[k])
        kv = _axis_kv(axes[k], d, periodic[k], periods[k], names[k])
        kvs.append(kv)
        ops.append(_combined_operator(axes[k], kv, l))
    C = g.f
    for k in range(3):
        C = n_mode_product(C, ops[k], k)
    return SplineVolume(kvs[0], kvs[1], kvs[2], C)


def qi2d_polar(g: GridSample2D, degrees: tuple[int, int],
               fd_orders: tuple[int | None, int | None] = (None, None),
               period: float = 2.0 * np.pi) -> SplineSurface:
    """Fit data given over (radius, angle): periodic in the angular axis.

    The angular nodes must cover one period without repeating the seam
    sample; the radial axis is fitted with clamped ends.
    """
    theta = g.y
    if theta[-1] - theta[0] >= period:
        raise ValueError(
            "angular nodes must span less than one period (no seam duplicate)"
        )
    return qi2d_approx(g, degrees[0], degrees[1], fd_orders[0], fd_orders[1],
                       periodic=(False, True), periods=(None, period))
