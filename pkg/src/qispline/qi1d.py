"""Hermite B-spline quasi-interpolation in one dimension.

Each spline coefficient is a local linear functional of the data,

    mu[i] = sum_k alpha[i, k] * f(x_k)  -  sum_k w[i, k] * f'(x_k),

with the stencil covering d consecutive nodes.  The weights solve a local
exactness system: the functional must return exactly delta_{m,i} when fed
samples of the m-th B-spline, for every basis function m whose support
meets the stencil hull.  That system has a one-dimensional null space; the
implementation selects the member with the smallest scaled derivative
weights (ties broken on the value weights), which reduces to the familiar
symmetric weights on uniform interior stencils and makes the first and
last coefficients interpolate the end data.

The assembled weights form the banded matrices used by the tensor-product
pipelines; ``QIWeights`` also exposes the split into per-row step scales
and normalized derivative weights for a chosen (k1, k2), though only the
combined product enters any coefficient.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import numpy.typing as npt

from .bspline import KnotVector, SplineCurve, _basis_all_derivs, _find_span, make_knots
from .finite_difference import apply_gamma, build_gamma

Array = npt.NDArray[np.float64]

_PIN_TOL = 1e-9


@dataclass(frozen=True)
class HermiteData:
    """Nodal samples: values and (optionally) first derivatives."""

    nodes: Array
    values: Array
    derivatives: Array | None = None

    def __post_init__(self) -> None:
        nodes = np.ascontiguousarray(self.nodes, dtype=np.float64)
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        if nodes.ndim != 1:
            raise ValueError("nodes must be one-dimensional")
        if not np.all(np.diff(nodes) > 0):
            raise ValueError("nodes must be strictly increasing")
        if values.shape[0] != nodes.size:
            raise ValueError(
                f"values rows {values.shape[0]} do not match {nodes.size} nodes"
            )
        if self.derivatives is not None:
            der = np.ascontiguousarray(self.derivatives, dtype=np.float64)
            if der.shape != values.shape:
                raise ValueError("derivative array must match the value array shape")
            object.__setattr__(self, "derivatives", der)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "values", values)


def default_fd_order(degree: int) -> int:
    """Derivative-approximation order used when none is given: d+1 odd, d+2 even."""
    return degree + 1 if degree % 2 == 1 else degree + 2


def _stencil_start(co: int, d: int, N: int) -> int:
    """First stencil-node index serving coefficient ``co`` (0-based)."""
    if co <= d - 2:
        return 0
    if co >= N + 1:
        return N - d + 1
    return co - d + 1


def _select_in_family(z0: Array, nu: Array, d: int) -> Array:
    """Pick the exactness-family member with minimal scaled derivative weights."""
    beta0, nub = z0[d:], nu[d:]
    nb2 = float(nub @ nub)
    if math.sqrt(nb2) > _PIN_TOL:
        t = -float(beta0 @ nub) / nb2
    else:
        nua = nu[:d]
        t = -float(z0[:d] @ nua) / float(nua @ nua)
    return z0 + t * nu


def _solve_stencil(values: Array, derivs: Array, hscale: float) -> Array:
    """Solve the local exactness system for every target on one stencil.

    values, derivs: (n_active, d) arrays of basis data at the stencil nodes.
    Returns (n_active, 2d): row r holds (alpha, w) extracting coefficient r.
    """
    d = values.shape[1]
    E = np.hstack([values, -hscale * derivs])
    nact = E.shape[0]
    # row equilibration: strongly graded meshes produce rows of very
    # different size; the solution family is unchanged
    rn = np.linalg.norm(E, axis=1)
    if np.any(rn == 0.0):
        raise ValueError("singular local exactness system: degenerate knot geometry")
    Es = E / rn[:, None]
    G = np.linalg.pinv(Es)
    if np.max(np.abs(Es @ G - np.eye(nact))) > 1e-8:
        raise ValueError("singular local exactness system: degenerate knot geometry")
    _, _, Vt = np.linalg.svd(Es)
    out = np.empty((nact, 2 * d))
    eye = np.eye(nact)
    if Vt.shape[0] > nact:  # one-dimensional null space
        nu = Vt[-1]
        for r in range(nact):
            z = _select_in_family(G[:, r] / rn[r], nu, d)
            z += G @ ((eye[r] - E @ z) / rn)  # refinement, stays in the family
            out[r] = z
    else:
        for r in range(nact):
            z = G[:, r] / rn[r]
            out[r] = z + G @ ((eye[r] - E @ z) / rn)
    out[:, d:] *= hscale
    return out


@dataclass(frozen=True)
class QIWeights:
    """Per-coefficient functional weights in banded matrix form.

    ``mu = alpha @ f - wmat @ f'`` gives the spline coefficients.  ``k1``
    and ``k2`` fix the step scale hhat[i] used to report the normalized
    derivative weights (wmat = diag(hhat) @ beta); coefficients are
    invariant to that split.
    """

    kv: KnotVector
    alpha: Array
    wmat: Array
    k1: int
    k2: int
    hhat: Array = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "hhat", _hhat_scales(self.kv, self.k1, self.k2))

    @property
    def beta(self) -> Array:
        """Normalized derivative weights: wmat = diag(hhat) @ beta."""
        return self.wmat / self.hhat[:, None]

    def apply(self, values: Array, derivatives: Array) -> Array:
        return self.alpha @ values - self.wmat @ derivatives


def _hhat_scales(kv: KnotVector, k1: int, k2: int) -> Array:
    bp = kv.breakpoints
    N = kv.num_spans
    d = kv.degree
    h = np.diff(bp)
    n = kv.num_basis
    out = np.empty(n)
    for i1 in range(1, n + 1):  # 1-based row index
        if i1 <= d:
            idx = k1
        elif i1 <= N:
            idx = k1 + i1 - d
        else:
            idx = N - k2
        out[i1 - 1] = h[min(max(idx, 1), N) - 1]
    return out


def _default_split(d: int) -> int:
    return (d + 1) // 2


def local_weights(kv: KnotVector, j: int) -> tuple[Array, Array]:
    """Functional weights (alpha, w) for the coefficient with paper-style
    index ``j`` in ``[-d, N-1]`` (0-based coefficient j + d)."""
    d = kv.degree
    N = kv.num_spans
    if kv.periodic:
        raise ValueError("local_weights applies to non-periodic knot vectors")
    if not (-d <= j <= N - 1):
        raise ValueError(f"coefficient index {j} outside [-{d}, {N - 1}]")
    qw = qi_weight_matrices(kv)
    co = j + d
    s = _stencil_start(co, d, N)
    return qw.alpha[co, s:s + d].copy(), qw.wmat[co, s:s + d].copy()


def qi_weight_matrices(kv: KnotVector, k1: int | None = None,
                       k2: int | None = None) -> QIWeights:
    """Assemble the full weight matrices for a knot vector."""
    d = kv.degree
    k1 = _default_split(d) if k1 is None else k1
    k2 = _default_split(d) if k2 is None else k2
    if kv.periodic:
        alpha, wmat = _weights_periodic(kv)
    else:
        alpha, wmat = _weights_bounded(kv)
    alpha.setflags(write=False)
    wmat.setflags(write=False)
    return QIWeights(kv, alpha, wmat, k1, k2)


def _weights_bounded(kv: KnotVector) -> tuple[Array, Array]:
    d = kv.degree
    N = kv.num_spans
    bp = kv.breakpoints
    n = N + d
    alpha = np.zeros((n, N + 1))
    wmat = np.zeros((n, N + 1))
    if d == 1:
        # hat-function coefficients equal the data; derivative data unused
        alpha[np.arange(n), np.arange(n)] = 1.0
        return alpha, wmat

    uniform = _uniform_spacing(bp)
    tau = kv.knots
    nb_ext = n
    cache: dict[object, Array] = {}
    for co in range(n):
        s = _stencil_start(co, d, N)
        key: object = "interior" if (uniform and d - 1 <= s <= N - 2 * d + 2) else s
        if key not in cache:
            nodes = bp[s:s + d]
            hscale = (nodes[-1] - nodes[0]) / (d - 1)
            # active basis rows are s .. s + 2d - 2; the basis function just
            # past the window vanishes with its derivative at the stencil
            vals = np.zeros((2 * d - 1, d))
            ders = np.zeros((2 * d - 1, d))
            for i, x in enumerate(nodes):
                span = _find_span(tau, d, float(x), nb_ext)
                dv = _basis_all_derivs(tau, d, span, float(x), 1)
                for k in range(d + 1):
                    row = span - d + k - s
                    if 0 <= row <= 2 * d - 2:
                        vals[row, i] = dv[0, k]
                        ders[row, i] = dv[1, k]
            cache[key] = _solve_stencil(vals, ders, hscale)
        sol = cache[key]
        r = co - s
        alpha[co, s:s + d] = sol[r, :d]
        wmat[co, s:s + d] = sol[r, d:]
    return alpha, wmat


def _weights_periodic(kv: KnotVector) -> tuple[Array, Array]:
    d = kv.degree
    N = kv.num_spans  # also the coefficient count
    bp = kv.breakpoints  # N+1 entries, bp[N] = bp[0] + period
    T = kv.period
    alpha = np.zeros((N, N))
    wmat = np.zeros((N, N))
    if d == 1:
        # hat peaked at node co carries the sample there, as in the
        # general rule's stencil start s = co - d + 1
        alpha[np.arange(N), np.arange(N)] = 1.0
        return alpha, wmat

    def unrolled(k: int) -> float:
        return bp[k % N] + (k // N) * T

    uniform = _uniform_spacing(bp)
    cached: Array | None = None
    for co in range(N):
        s = co - d + 1
        if uniform and cached is not None:
            sol = cached
        else:
            # local unclamped knot window around the stencil; local basis u on
            # tau_u corresponds to the unrolled basis s + u
            tau_u = np.array([unrolled(s - d + i) for i in range(4 * d)])
            nodes = tau_u[d:2 * d]
            hscale = (nodes[-1] - nodes[0]) / (d - 1)
            vals = np.zeros((2 * d - 1, d))
            ders = np.zeros((2 * d - 1, d))
            for i, x in enumerate(nodes):
                span = _find_span(tau_u, d, float(x), tau_u.size - d - 1)
                dv = _basis_all_derivs(tau_u, d, span, float(x), 1)
                for k in range(d + 1):
                    row = span - d + k
                    if 0 <= row <= 2 * d - 2:
                        vals[row, i] = dv[0, k]
                        ders[row, i] = dv[1, k]
            if N < 2 * d - 1:
                # wrapped copies of one periodic basis share an exactness row
                mvals = np.zeros((N, d))
                mders = np.zeros((N, d))
                for u in range(2 * d - 1):
                    mvals[u % N] += vals[u]
                    mders[u % N] += ders[u]
                sol_m = _solve_stencil(mvals, mders, hscale)
                sol = np.zeros((2 * d - 1, 2 * d))
                for u in range(2 * d - 1):
                    sol[u] = sol_m[u % N]
            else:
                sol = _solve_stencil(vals, ders, hscale)
            if uniform:
                cached = sol
        r = d - 1  # middle target
        node_ids = np.arange(s, s + d) % N
        np.add.at(alpha[co], node_ids, sol[r, :d])
        np.add.at(wmat[co], node_ids, sol[r, d:])
    return alpha, wmat


def _uniform_spacing(bp: Array) -> bool:
    h = np.diff(bp)
    return bool(np.all(np.abs(h - h[0]) <= 1e-12 * abs(h[0])))


def _prepare_nodes(nodes, periodic: bool, period: float | None):
    nodes = np.asarray(nodes, dtype=np.float64)
    if not periodic:
        return nodes, nodes
    if period is None:
        raise ValueError("periodic fit needs a period")
    if nodes[-1] - nodes[0] >= period:
        raise ValueError("periodic nodes must span less than one period")
    breakpoints = np.concatenate([nodes, [nodes[0] + period]])
    return nodes, breakpoints


def qi_hermite(data: HermiteData, degree: int, periodic: bool = False,
               period: float | None = None) -> SplineCurve:
    """Fit the Hermite quasi-interpolant from nodal values and derivatives."""
    if data.derivatives is None:
        raise ValueError("Hermite fit needs derivative values")
    nodes, breakpoints = _prepare_nodes(data.nodes, periodic, period)
    N = breakpoints.size - 1
    if N < degree:
        raise ValueError(f"need at least degree+1 = {degree + 1} nodes, got {N + 1}")
    kv = make_knots(degree, breakpoints, periodic)
    qw = qi_weight_matrices(kv)
    vals = np.atleast_2d(data.values.T).T  # (m, p)
    ders = np.atleast_2d(data.derivatives.T).T
    mu = qw.apply(vals, ders)
    if data.values.ndim == 1:
        mu = mu[:, 0]
    return SplineCurve(kv, mu)


def qi_approx(nodes, values, degree: int, fd_order: int | None = None,
              periodic: bool = False, period: float | None = None) -> SplineCurve:
    """Quasi-interpolant from function values only; derivatives come from
    the order-``fd_order`` difference operator (default d+1 odd / d+2 even)."""
    l = default_fd_order(degree) if fd_order is None else fd_order
    nodes = np.asarray(nodes, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    m = nodes.size
    nmin = max(degree, l)
    if (m - 1 < nmin and not periodic) or (periodic and m < nmin + 1):
        raise ValueError(
            f"need at least max(degree, fd_order)+1 = {nmin + 1} nodes, got {m}"
        )
    gamma = build_gamma(nodes, l, periodic=periodic, period=period)
    derivs = apply_gamma(gamma, values)
    return qi_hermite(HermiteData(nodes, values, derivs), degree,
                      periodic=periodic, period=period)


def estimate_order(errors, Ns) -> list[float]:
    """log2(e_k / e_{k+1}) per refinement step of a dyadic N sequence."""
    errors = np.asarray(errors, dtype=np.float64)
    Ns = np.asarray(Ns)
    if errors.size != Ns.size:
        raise ValueError("errors and Ns must have equal length")
    if np.any(errors <= 0):
        raise ValueError("errors must be positive")
    return [float(np.log2(errors[k] / errors[k + 1])) for k in range(errors.size - 1)]
