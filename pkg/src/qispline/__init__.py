"""Hermite B-spline quasi-interpolation for curves, surfaces and volumes."""

from .bspline import (
    KnotVector,
    SplineCurve,
    SplineSurface,
    SplineVolume,
    basis_eval,
    collocation_matrix,
    curve_eval,
    curve_integral,
    greville_abscissae,
    load_spline,
    make_knots,
    save_spline,
    spline_from_dict,
    spline_to_dict,
    surface_eval,
    volume_eval,
)
from .finite_difference import FDOperator, apply_gamma, build_gamma, fd_weights
from .qi1d import (
    HermiteData,
    QIWeights,
    default_fd_order,
    estimate_order,
    local_weights,
    qi_approx,
    qi_hermite,
    qi_weight_matrices,
)
from .tensor import (
    GridSample2D,
    GridSample3D,
    n_mode_product,
    qi2d_approx,
    qi2d_hermite,
    qi2d_polar,
    qi3d_approx,
)

__version__ = "0.1.0"

__all__ = [
    "KnotVector", "SplineCurve", "SplineSurface", "SplineVolume",
    "make_knots", "basis_eval", "collocation_matrix", "greville_abscissae",
    "curve_eval", "curve_integral", "surface_eval", "volume_eval",
    "spline_to_dict", "spline_from_dict", "save_spline", "load_spline",
    "FDOperator", "fd_weights", "build_gamma", "apply_gamma",
    "HermiteData", "QIWeights", "qi_weight_matrices", "local_weights",
    "qi_hermite", "qi_approx", "default_fd_order", "estimate_order",
    "GridSample2D", "GridSample3D", "n_mode_product",
    "qi2d_hermite", "qi2d_approx", "qi3d_approx", "qi2d_polar",
    "__version__",
]
