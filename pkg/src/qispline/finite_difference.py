"""First-derivative approximation on arbitrary node sets and the banded
global operator that maps nodal values to derivative estimates.

Row n of the operator applies an (l+1)-point stencil around node n:
one-sided at the ends, as centered as the split l1 = floor(l/2) allows in
the interior.  On symmetric grids the operator is mirror-antisymmetric;
for odd l this requires building the upper half of the grid as the
sign-flipped mirror of the lower half (for even l the plain rules already
have that symmetry).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import numpy.typing as npt

Array = npt.NDArray[np.float64]


def fd_weights(nodes, target: float) -> Array:
    """Weights w with sum(w * q(nodes)) = q'(target) for all deg(q) <= len(nodes)-1.

    Solved from the polynomial-exactness system in the local coordinate
    (nodes - target) / spread, which keeps the Vandermonde well conditioned.
    """
    nodes = np.asarray(nodes, dtype=np.float64)
    if nodes.ndim != 1 or nodes.size < 2:
        raise ValueError("need at least two stencil nodes")
    if np.unique(nodes).size != nodes.size:
        raise ValueError("stencil nodes must be distinct")
    m = nodes.size
    sigma = float(np.max(np.abs(nodes - target)))
    if sigma == 0.0:
        raise ValueError("stencil nodes must spread around the target")
    A = np.vander((nodes - target) / sigma, m, increasing=True).T
    rhs = np.zeros(m)
    rhs[1] = 1.0 / sigma
    return np.linalg.solve(A, rhs)


@dataclass(frozen=True)
class FDOperator:
    """Banded derivative operator on a fixed grid.

    ``matrix`` is stored dense for simplicity; rows obey the banded layout
    (at most ``order + 1`` non-zeros each) and tests assert that structure.
    """

    nodes: Array
    order: int
    periodic: bool = False
    period: float | None = None
    matrix: Array = field(init=False)

    def __post_init__(self) -> None:
        nodes = np.ascontiguousarray(self.nodes, dtype=np.float64)
        if not np.all(np.diff(nodes) > 0):
            raise ValueError("grid nodes must be strictly increasing")
        l = self.order
        if l < 1:
            raise ValueError("order must be >= 1")
        m = nodes.size
        if self.periodic:
            if self.period is None:
                raise ValueError("periodic operator needs a period")
            if nodes[-1] - nodes[0] >= self.period:
                raise ValueError("periodic nodes must span less than one period")
            if m < l + 1:
                raise ValueError(f"need at least order+1 = {l + 1} nodes, got {m}")
            mat = _build_periodic(nodes, l, float(self.period))
        else:
            if m < l + 1:
                raise ValueError(f"need at least order+1 = {l + 1} nodes, got {m}")
            mat = _build_bounded(nodes, l)
        nodes.setflags(write=False)
        mat.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "matrix", mat)

    @property
    def l1(self) -> int:
        return self.order // 2

    @property
    def l2(self) -> int:
        return self.order - self.l1

    def apply(self, values) -> Array:
        return apply_gamma(self, values)


def _row_indices(n: int, N: int, l: int) -> np.ndarray:
    """Stencil node indices for row n, mirrored on the upper half of the grid."""
    l1, l2 = l // 2, l - l // 2
    if 2 * n <= N:
        if n < l1:
            return np.arange(0, l + 1)
        return np.arange(n - l1, n - l1 + l + 1)
    # mirror of the rule at N - n, so that reversing a symmetric grid
    # reverses and negates the operator
    if N - n < l1:
        return np.arange(N - l, N + 1)
    return np.arange(n - l2, n - l2 + l + 1)


def _build_bounded(nodes: Array, l: int) -> Array:
    N = nodes.size - 1
    mat = np.zeros((N + 1, N + 1))
    uniform = _is_uniform(nodes)
    cache: dict[tuple[int, ...], Array] = {}
    for n in range(N + 1):
        idx = _row_indices(n, N, l)
        if uniform:
            key = tuple(idx - n)
            if key not in cache:
                cache[key] = fd_weights(nodes[idx], float(nodes[n]))
            mat[n, idx] = cache[key]
        else:
            mat[n, idx] = fd_weights(nodes[idx], float(nodes[n]))
    return mat


def _build_periodic(nodes: Array, l: int, period: float) -> Array:
    m = nodes.size
    l1 = l // 2
    mat = np.zeros((m, m))
    uniform = _is_uniform(np.concatenate([nodes, [nodes[0] + period]]))
    wts_cached: Array | None = None
    for n in range(m):
        ids = np.arange(n - l1, n - l1 + l + 1)
        coords = nodes[ids % m] + (ids // m) * period
        if uniform:
            if wts_cached is None:
                wts_cached = fd_weights(coords, float(nodes[n]))
            w = wts_cached
        else:
            w = fd_weights(coords, float(nodes[n]))
        np.add.at(mat[n], ids % m, w)
    return mat


def _is_uniform(nodes: Array) -> bool:
    h = np.diff(nodes)
    return bool(np.all(np.abs(h - h[0]) <= 1e-12 * abs(h[0])))


def build_gamma(grid, l: int, periodic: bool = False,
                period: float | None = None) -> FDOperator:
    """Assemble the order-``l`` derivative operator on ``grid``."""
    return FDOperator(np.asarray(grid, dtype=np.float64), l, periodic, period)


def apply_gamma(op: FDOperator, values) -> Array:
    """Apply the operator column-wise: values may be (m,) or (m, p)."""
    v = np.asarray(values, dtype=np.float64)
    if v.shape[0] != op.matrix.shape[1]:
        raise ValueError(
            f"value rows {v.shape[0]} do not match grid size {op.matrix.shape[1]}"
        )
    return op.matrix @ v
