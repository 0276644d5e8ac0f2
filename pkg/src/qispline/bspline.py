"""B-spline foundations: extended knot vectors, basis evaluation, and
spline curves, tensor-product surfaces and volumes.

Coefficient indexing is 0-based throughout: a curve of degree ``d`` on
``N + 1`` breakpoints has ``n = N + d`` coefficients ``c[0] .. c[n-1]``
ordered left to right (periodic curves carry ``N`` coefficients that wrap
cyclically).  All containers are immutable after construction and every
operation is pure, so concurrent evaluation needs no locking.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import numpy.typing as npt

Array = npt.NDArray[np.float64]

_DOMAIN_RTOL = 1e-12


# ---------------------------------------------------------------------------
# knot vectors
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class KnotVector:
    """Extended knot sequence for degree-``degree`` splines on ``breakpoints``.

    The extended sequence has ``N + 2*degree + 1`` knots where
    ``N = len(breakpoints) - 1``.  Non-periodic vectors are clamped (all
    auxiliary knots coincide with the interval ends); periodic vectors use
    wrap-around translates of the interior breakpoints.
    """

    degree: int
    breakpoints: Array
    periodic: bool = False
    knots: Array = field(init=False)

    def __post_init__(self) -> None:
        bp = np.ascontiguousarray(self.breakpoints, dtype=np.float64)
        if bp.ndim != 1:
            raise ValueError("breakpoints must be a 1D sequence")
        if self.degree < 1:
            raise ValueError("degree must be >= 1")
        if bp.size < self.degree + 1:
            raise ValueError(
                f"too few breakpoints: need at least degree+1 = {self.degree + 1}, "
                f"got {bp.size}"
            )
        if not np.all(np.diff(bp) > 0):
            raise ValueError("breakpoints must be strictly increasing")
        d = self.degree
        if self.periodic:
            left = bp[0] - (bp[-1] - bp[-1 - d:-1])
            right = bp[-1] + (bp[1:d + 1] - bp[0])
            tau = np.concatenate([left, bp, right])
        else:
            tau = np.concatenate([np.full(d, bp[0]), bp, np.full(d, bp[-1])])
        bp.setflags(write=False)
        tau.setflags(write=False)
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "knots", tau)

    @property
    def num_spans(self) -> int:
        """Number of breakpoint intervals N."""
        return self.breakpoints.size - 1

    @property
    def num_basis(self) -> int:
        """Dimension of the spline space: N + degree (non-periodic), N (periodic)."""
        n = self.num_spans + self.degree
        return self.num_spans if self.periodic else n

    @property
    def domain(self) -> tuple[float, float]:
        return float(self.breakpoints[0]), float(self.breakpoints[-1])

    @property
    def period(self) -> float:
        a, b = self.domain
        return b - a


def make_knots(degree: int, breakpoints, periodic: bool = False) -> KnotVector:
    """Build a :class:`KnotVector`; clamped unless ``periodic``."""
    return KnotVector(degree, np.asarray(breakpoints, dtype=np.float64), periodic)


# ---------------------------------------------------------------------------
# local basis kernels (de Boor / Cox recurrences on a raw knot array)
# ---------------------------------------------------------------------------

def _find_span(tau: Array, d: int, x: float, nbasis: int) -> int:
    """Index k with tau[k] <= x < tau[k+1]; right endpoint closes the last span."""
    if x >= tau[nbasis]:
        k = nbasis - 1
        while tau[k] == tau[k + 1]:
            k -= 1
        return k
    k = int(np.searchsorted(tau, x, side="right") - 1)
    return max(k, d)


def _basis_values(tau: Array, d: int, span: int, x: float) -> Array:
    """The d+1 B-splines non-zero on span, by the Cox-de Boor recurrence."""
    left = np.empty(d)
    right = np.empty(d)
    vals = np.empty(d + 1)
    vals[0] = 1.0
    for j in range(d):
        left[j] = x - tau[span - j]
        right[j] = tau[span + 1 + j] - x
        saved = 0.0
        for r in range(j + 1):
            tmp = vals[r] / (right[r] + left[j - r])
            vals[r] = saved + right[r] * tmp
            saved = left[j - r] * tmp
        vals[j + 1] = saved
    return vals


def _basis_all_derivs(tau: Array, d: int, span: int, x: float, nder: int) -> Array:
    """Rows 0..nder of derivatives of the d+1 active B-splines at x."""
    ndu = np.empty((d + 1, d + 1))
    a = np.empty((2, d + 1))
    ders = np.zeros((nder + 1, d + 1))
    left = np.empty(d + 1)
    right = np.empty(d + 1)
    ndu[0, 0] = 1.0
    for j in range(1, d + 1):
        left[j] = x - tau[span + 1 - j]
        right[j] = tau[span + j] - x
        saved = 0.0
        for r in range(j):
            ndu[j, r] = right[r + 1] + left[j - r]
            tmp = ndu[r, j - 1] / ndu[j, r]
            ndu[r, j] = saved + right[r + 1] * tmp
            saved = left[j - r] * tmp
        ndu[j, j] = saved
    ders[0, :] = ndu[:, d]
    kmax = min(nder, d)
    for r in range(d + 1):
        s1, s2 = 0, 1
        a[0, 0] = 1.0
        for k in range(1, kmax + 1):
            dd = 0.0
            rk, pk = r - k, d - k
            if r >= k:
                a[s2, 0] = a[s1, 0] / ndu[pk + 1, rk]
                dd = a[s2, 0] * ndu[rk, pk]
            j1 = 1 if rk >= -1 else -rk
            j2 = k - 1 if r - 1 <= pk else d - r
            for j in range(j1, j2 + 1):
                a[s2, j] = (a[s1, j] - a[s1, j - 1]) / ndu[pk + 1, rk + j]
                dd += a[s2, j] * ndu[rk + j, pk]
            if r <= pk:
                a[s2, k] = -a[s1, k - 1] / ndu[pk + 1, r]
                dd += a[s2, k] * ndu[r, pk]
            ders[k, r] = dd
            s1, s2 = s2, s1
    fac = float(d)
    for k in range(1, kmax + 1):
        ders[k, :] *= fac
        fac *= d - k
    return ders


def _check_domain(kv: KnotVector, x: float) -> float:
    a, b = kv.domain
    tol = _DOMAIN_RTOL * max(abs(a), abs(b), b - a)
    if x < a - tol or x > b + tol:
        raise ValueError(f"point {x!r} outside the spline domain [{a}, {b}]")
    return min(max(x, a), b)


def basis_eval(kv: KnotVector, x: float, deriv_order: int = 0) -> tuple[int, Array]:
    """Evaluate the d+1 B-splines that are non-zero at ``x``.

    Returns ``(first_active, values)`` where ``values[i]`` is the
    ``deriv_order``-th derivative of basis function ``first_active + i``.
    Points outside the domain raise ``ValueError`` (no extrapolation).
    """
    if deriv_order < 0:
        raise ValueError("deriv_order must be >= 0")
    x = _check_domain(kv, float(x))
    d = kv.degree
    nb = kv.num_spans + d  # basis count on the extended knots
    span = _find_span(kv.knots, d, x, nb)
    if deriv_order == 0:
        vals = _basis_values(kv.knots, d, span, x)
    else:
        vals = _basis_all_derivs(kv.knots, d, span, x, deriv_order)[deriv_order]
    return span - d, vals


def collocation_matrix(kv: KnotVector, xs, deriv_order: int = 0) -> Array:
    """Dense matrix B with B[i, j] = (d^r/dx^r) B_j(xs[i]).

    Periodic knot vectors fold the wrap-around columns, so the matrix has
    ``kv.num_basis`` columns in both cases.
    """
    xs = np.atleast_1d(np.asarray(xs, dtype=np.float64))
    d = kv.degree
    nb_ext = kv.num_spans + d
    out = np.zeros((xs.size, nb_ext))
    a, b = kv.domain
    if kv.periodic:
        xs = a + np.mod(xs - a, b - a)
    for i, x in enumerate(xs):
        first, vals = basis_eval(kv, x, deriv_order)
        out[i, first:first + d + 1] = vals
    if kv.periodic:
        n = kv.num_basis
        folded = np.zeros((xs.size, n))
        for m in range(nb_ext):
            folded[:, m % n] += out[:, m]
        return folded
    return out


def greville_abscissae(kv: KnotVector) -> Array:
    """Knot averages (tau[j+1] + ... + tau[j+d]) / d, one per basis function."""
    d = kv.degree
    tau = kv.knots
    nb = kv.num_spans + d
    xi = np.array([tau[j + 1:j + 1 + d].mean() for j in range(nb)])
    return xi[:kv.num_basis] if kv.periodic else xi


# ---------------------------------------------------------------------------
# curves, surfaces, volumes
# ---------------------------------------------------------------------------

def _as_coeff_2d(c, n: int, what: str) -> Array:
    c = np.ascontiguousarray(c, dtype=np.float64)
    if c.ndim == 1:
        c = c[:, None]
    if c.ndim != 2 or c.shape[0] != n:
        raise ValueError(f"{what}: expected {n} coefficient rows, got shape {c.shape}")
    c.setflags(write=False)
    return c


@dataclass(frozen=True)
class SplineCurve:
    """Spline sum(c[j] * B_j) with scalar or vector coefficients."""

    kv: KnotVector
    coefficients: Array  # (n,) or (n, p)
    _c2d: Array = field(init=False, repr=False)
    _vector: bool = field(init=False, repr=False)

    def __post_init__(self) -> None:
        c = np.asarray(self.coefficients, dtype=np.float64)
        object.__setattr__(self, "_vector", c.ndim == 2)
        object.__setattr__(self, "_c2d", _as_coeff_2d(c, self.kv.num_basis, "SplineCurve"))
        c = self._c2d if self._vector else self._c2d[:, 0]
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)

    @property
    def codim(self) -> int:
        return self._c2d.shape[1]

    def _c_extended(self) -> Array:
        """Coefficients aligned with the extended basis (cyclic wrap if periodic)."""
        if not self.kv.periodic:
            return self._c2d
        n = self.kv.num_basis
        nb_ext = self.kv.num_spans + self.kv.degree
        idx = np.arange(nb_ext) % n
        return self._c2d[idx]

    def __call__(self, x, deriv_order: int = 0):
        return self.eval(x, deriv_order)

    def eval(self, x, deriv_order: int = 0):
        """Evaluate the curve (or a derivative) at scalar or array ``x``."""
        xs = np.asarray(x, dtype=np.float64)
        scalar_in = xs.ndim == 0
        xs = np.atleast_1d(xs)
        kv = self.kv
        a, b = kv.domain
        if kv.periodic:
            xs = a + np.mod(xs - a, b - a)
        cext = self._c_extended()
        d = kv.degree
        out = np.zeros((xs.size, cext.shape[1]))
        for i, xi in enumerate(xs):
            first, vals = basis_eval(kv, xi, deriv_order)
            out[i] = vals @ cext[first:first + d + 1]
        if not self._vector:
            out = out[:, 0]
        return out[0] if scalar_in else out

    def derivative_curve(self) -> "SplineCurve":
        """Curve representing the first derivative (degree drops by one)."""
        kv = self.kv
        if kv.degree < 2:
            raise ValueError("derivative_curve needs degree >= 2")
        d, tau = kv.degree, kv.knots
        cext = self._c_extended()
        nb_ext = kv.num_spans + d
        dc = np.empty((nb_ext - 1, cext.shape[1]))
        for j in range(nb_ext - 1):
            dt = tau[j + d + 1] - tau[j + 1]
            dc[j] = d * (cext[j + 1] - cext[j]) / dt if dt > 0 else 0.0
        dkv = KnotVector(d - 1, kv.breakpoints, kv.periodic)
        if kv.periodic:
            dc = dc[: kv.num_spans]
        if not self._vector:
            dc = dc[:, 0]
        return SplineCurve(dkv, dc)

    def antiderivative_curve(self) -> "SplineCurve":
        """Degree d+1 clamped curve S with S' = self and S(a) = 0."""
        kv = self.kv
        if kv.periodic:
            raise ValueError("antiderivative_curve requires a non-periodic curve")
        cum = self._antiderivative_coeffs()
        ac = cum if self._vector else cum[:, 0]
        return SplineCurve(KnotVector(kv.degree + 1, kv.breakpoints), ac)

    def _antiderivative_coeffs(self) -> Array:
        kv = self.kv
        d, tau = kv.degree, kv.knots
        cext = self._c_extended()
        nb_ext = kv.num_spans + d
        inc = (tau[np.arange(nb_ext) + d + 1] - tau[np.arange(nb_ext)]) / (d + 1)
        return np.concatenate(
            [np.zeros((1, cext.shape[1])), np.cumsum(inc[:, None] * cext, axis=0)]
        )

    def integral(self, x0: float, x1: float):
        """Exact integral over [x0, x1] via the antiderivative recurrence.

        Works on clamped and periodic curves alike; only the difference of
        the antiderivative enters, so no clamping of the raised-degree knot
        sequence is needed.
        """
        kv = self.kv
        x0 = _check_domain(kv, float(x0))
        x1 = _check_domain(kv, float(x1))
        p = kv.degree + 1
        tau = kv.knots
        tau2 = np.concatenate([tau[:1], tau, tau[-1:]])
        cum = self._antiderivative_coeffs()
        nb2 = tau2.size - p - 1

        def anti_at(x: float) -> Array:
            span = _find_span(tau2, p, x, nb2)
            vals = _basis_values(tau2, p, span, x)
            return vals @ cum[span - p:span + 1]

        out = anti_at(x1) - anti_at(x0)
        if not self._vector:
            return float(out[0])
        return out


def curve_eval(s: SplineCurve, x, deriv_order: int = 0):
    return s.eval(x, deriv_order)


def curve_integral(s: SplineCurve, x0: float, x1: float):
    return s.integral(x0, x1)


@dataclass(frozen=True)
class SplineSurface:
    """Tensor-product spline s(x, y) = sum c[p, q] phi_p(x) psi_q(y)."""

    kvx: KnotVector
    kvy: KnotVector
    coefficients: Array  # (n1, n2)

    def __post_init__(self) -> None:
        c = np.ascontiguousarray(self.coefficients, dtype=np.float64)
        n1, n2 = self.kvx.num_basis, self.kvy.num_basis
        if c.shape != (n1, n2):
            raise ValueError(f"coefficient shape {c.shape} != ({n1}, {n2})")
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)

    def eval(self, x: float, y: float, dx_order: int = 0, dy_order: int = 0) -> float:
        bx = collocation_matrix(self.kvx, [x], dx_order)[0]
        by = collocation_matrix(self.kvy, [y], dy_order)[0]
        return float(bx @ self.coefficients @ by)

    def eval_grid(self, xs, ys, dx_order: int = 0, dy_order: int = 0) -> Array:
        """Values on the tensor grid xs x ys, shape (len(xs), len(ys))."""
        bx = collocation_matrix(self.kvx, xs, dx_order)
        by = collocation_matrix(self.kvy, ys, dy_order)
        return bx @ self.coefficients @ by.T

    __call__ = eval


def surface_eval(s: SplineSurface, x: float, y: float,
                 dx_order: int = 0, dy_order: int = 0) -> float:
    return s.eval(x, y, dx_order, dy_order)


@dataclass(frozen=True)
class SplineVolume:
    """Tensor-product spline of three variables."""

    kvx: KnotVector
    kvy: KnotVector
    kvz: KnotVector
    coefficients: Array  # (n1, n2, n3)

    def __post_init__(self) -> None:
        c = np.ascontiguousarray(self.coefficients, dtype=np.float64)
        shape = (self.kvx.num_basis, self.kvy.num_basis, self.kvz.num_basis)
        if c.shape != shape:
            raise ValueError(f"coefficient shape {c.shape} != {shape}")
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)

    def eval(self, x: float, y: float, z: float, orders=(0, 0, 0)) -> float:
        bx = collocation_matrix(self.kvx, [x], orders[0])[0]
        by = collocation_matrix(self.kvy, [y], orders[1])[0]
        bz = collocation_matrix(self.kvz, [z], orders[2])[0]
        return float(np.einsum("i,j,k,ijk->", bx, by, bz, self.coefficients))

    def eval_grid(self, xs, ys, zs, orders=(0, 0, 0)) -> Array:
        bx = collocation_matrix(self.kvx, xs, orders[0])
        by = collocation_matrix(self.kvy, ys, orders[1])
        bz = collocation_matrix(self.kvz, zs, orders[2])
        c = self.coefficients
        t = bx @ c.reshape(c.shape[0], -1)
        t = t.reshape(bx.shape[0], c.shape[1], c.shape[2])
        t = np.moveaxis(np.tensordot(by, t, axes=(1, 1)), 0, 1)
        return np.tensordot(t, bz, axes=(2, 1))

    __call__ = eval


def volume_eval(s: SplineVolume, x: float, y: float, z: float, orders=(0, 0, 0)) -> float:
    return s.eval(x, y, z, orders)


# ---------------------------------------------------------------------------
# serialization (shared JSON schema, bit-exact for IEEE-754 doubles)
# ---------------------------------------------------------------------------

FORMAT_VERSION = 1


def spline_to_dict(s) -> dict:
    """JSON-serializable description of a curve, surface or volume."""
    if isinstance(s, SplineCurve):
        kvs = [s.kv]
        coeffs = s._c2d
        shape = list(coeffs.shape) if s._vector else [coeffs.shape[0]]
    elif isinstance(s, SplineSurface):
        kvs = [s.kvx, s.kvy]
        coeffs = s.coefficients
        shape = list(coeffs.shape)
    elif isinstance(s, SplineVolume):
        kvs = [s.kvx, s.kvy, s.kvz]
        coeffs = s.coefficients
        shape = list(coeffs.shape)
    else:
        raise TypeError(f"not a spline object: {type(s).__name__}")
    return {
        "format_version": FORMAT_VERSION,
        "degrees": [kv.degree for kv in kvs],
        "knots": [kv.knots.tolist() for kv in kvs],
        "periodic": [kv.periodic for kv in kvs],
        "shape": shape,
        "coefficients": np.ascontiguousarray(coeffs).ravel().tolist(),
    }


def _kv_from_knots(degree: int, knots, periodic: bool) -> KnotVector:
    knots = np.asarray(knots, dtype=np.float64)
    bp = knots[degree:knots.size - degree]
    kv = KnotVector(degree, bp, periodic)
    if kv.knots.size != knots.size or not np.array_equal(kv.knots, knots):
        raise ValueError("knot sequence does not match its breakpoints and policy")
    return kv


def spline_from_dict(obj: dict):
    """Inverse of :func:`spline_to_dict`."""
    try:
        version = obj["format_version"]
        degrees = obj["degrees"]
        knots = obj["knots"]
        periodic = obj["periodic"]
        shape = tuple(obj["shape"])
        flat = np.asarray(obj["coefficients"], dtype=np.float64)
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed spline object: missing {exc}") from exc
    if version != FORMAT_VERSION:
        raise ValueError(f"unsupported format_version {version!r}")
    kvs = [_kv_from_knots(d, k, p) for d, k, p in zip(degrees, knots, periodic)]
    coeffs = flat.reshape(shape)
    ndim = len(degrees)
    if ndim == 1:
        return SplineCurve(kvs[0], coeffs)
    if ndim == 2:
        return SplineSurface(kvs[0], kvs[1], coeffs)
    if ndim == 3:
        return SplineVolume(kvs[0], kvs[1], kvs[2], coeffs)
    raise ValueError(f"unsupported dimensionality {ndim}")


def save_spline(s, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(spline_to_dict(s), fh)
        fh.write("\n")


def load_spline(path):
    with open(path, "r", encoding="utf-8") as fh:
        return spline_from_dict(json.load(fh))
