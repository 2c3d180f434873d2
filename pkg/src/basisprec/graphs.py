"""Ground-truth precision matrices for simulation studies.

Four generic graph families (band, cluster, random, scale-free) plus a
lattice spatial-autoregression construction for gridded bases. Off-diagonal
entries are set to 1 and the diagonal is lifted just enough to make the
matrix positive definite, so the sparsity pattern is the object of interest.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .basis import NodeGrid
from .linalg import NotSPDError, chol


@dataclass
class TruePrecision:
    """A known SPD precision matrix together with its edge set."""

    q: np.ndarray
    family: str
    pattern: set = field(default=None)

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=float)
        if not np.allclose(self.q, self.q.T):
            raise ValueError("precision matrix must be symmetric")
        chol(self.q, "true precision")  # SPD certificate
        if self.pattern is None:
            self.pattern = pattern_of(self.q)

    @property
    def ell(self) -> int:
        return self.q.shape[0]

    @property
    def n_edges(self) -> int:
        return len(self.pattern)


def pattern_of(q: np.ndarray, zero_tol: float = 0.0) -> set:
    """Off-diagonal support as a set of (i, j) pairs with i < j."""
    iu, ju = np.triu_indices(q.shape[0], k=1)
    keep = np.abs(q[iu, ju]) > zero_tol
    return set(zip(iu[keep].tolist(), ju[keep].tolist()))


def spd_correct(a: np.ndarray, margin: float = 0.1) -> np.ndarray:
    """Lift the diagonal so the smallest eigenvalue is at least ``margin``.

    Returns a + (max(0, -lambda_min(a)) + margin) * I; the off-diagonal
    pattern is untouched.
    """
    if margin <= 0:
        raise ValueError("margin must be positive")
    a = np.asarray(a, dtype=float)
    lam_min = float(np.linalg.eigvalsh(a)[0])
    return a + (max(0.0, -lam_min) + margin) * np.eye(a.shape[0])


def gen_band(ell: int, margin: float = 0.1) -> TruePrecision:
    """Tridiagonal precision: first off-diagonals equal to 1."""
    if ell < 2:
        raise ValueError("need at least 2 variables")
    a = np.zeros((ell, ell))
    idx = np.arange(ell - 1)
    a[idx, idx + 1] = 1.0
    a[idx + 1, idx] = 1.0
    return TruePrecision(spd_correct(a, margin), "band")


def gen_cluster(ell: int, block_count: int | None = None, fill_prob: float = 1.0,
                seed=None, margin: float = 0.1) -> TruePrecision:
    """Block-diagonal clusters; within-block off-diagonals are 1 with
    probability ``fill_prob``."""
    if block_count is None:
        block_count = max(1, round(ell / 20))
    if not (1 <= block_count <= ell):
        raise ValueError("block_count must be in [1, ell]")
    rng = np.random.default_rng(seed)
    bounds = np.linspace(0, ell, block_count + 1).astype(int)
    a = np.zeros((ell, ell))
    for b in range(block_count):
        lo, hi = bounds[b], bounds[b + 1]
        for i in range(lo, hi):
            for j in range(i + 1, hi):
                if rng.random() < fill_prob:
                    a[i, j] = a[j, i] = 1.0
    return TruePrecision(spd_correct(a, margin), "cluster")


def gen_random(ell: int, edge_prob: float | None = None, seed=None,
               margin: float = 0.1) -> TruePrecision:
    """Erdos-Renyi support: each pair is an edge independently."""
    if edge_prob is None:
        edge_prob = 3.0 / ell
    if not (0.0 <= edge_prob <= 1.0):
        raise ValueError("edge_prob must be in [0, 1]")
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(ell, k=1)
    on = rng.random(iu.shape[0]) < edge_prob
    a = np.zeros((ell, ell))
    a[iu[on], ju[on]] = 1.0
    a += a.T
    return TruePrecision(spd_correct(a, margin), "random")


def gen_scale_free(ell: int, seed=None, margin: float = 0.1) -> TruePrecision:
    """Preferential-attachment graph, one edge per arriving node.

    Nodes join one at a time and attach to an existing node chosen with
    probability proportional to its current degree, yielding ell - 1 edges
    and a heavy-tailed degree distribution.
    """
    if ell < 2:
        raise ValueError("need at least 2 variables")
    rng = np.random.default_rng(seed)
    a = np.zeros((ell, ell))
    # repeated-endpoint list makes degree-proportional sampling O(1)
    endpoints = [0, 1]
    a[0, 1] = a[1, 0] = 1.0
    for new in range(2, ell):
        target = endpoints[rng.integers(len(endpoints))]
        a[new, target] = a[target, new] = 1.0
        endpoints.extend((new, target))
    return TruePrecision(spd_correct(a, margin), "scale-free")


def latticekrig_precision(grid: NodeGrid, a_wght: float = 4.05,
                          nu: float = 0.5) -> TruePrecision:
    """Spatial-autoregression precision on a regular node lattice.

    Within each resolution level, B = a_wght * I - A with A the 4-nearest
    lattice adjacency, and the level precision is B^T B. Levels are combined
    block-diagonally; level k's coefficient variance is weighted by
    exp(-2 nu (k - 1)) (normalized over levels), so its precision block is
    scaled by the reciprocal weight.
    """
    if a_wght <= 4.0:
        raise ValueError("a_wght must exceed 4 for a positive definite "
                         "2-D lattice autoregression")
    levels = np.unique(grid.levels)
    raw = np.exp(-2.0 * nu * (levels - 1).astype(float))
    weights = raw / raw.sum()
    ell = len(grid)
    q = np.zeros((ell, ell))
    for lev, w in zip(levels, weights):
        idx = np.flatnonzero(grid.levels == lev)
        sub = grid.nodes[idx]
        d = np.linalg.norm(sub[:, None, :] - sub[None, :, :], axis=-1)
        off = d[d > 0]
        if off.size == 0:
            adj = np.zeros((len(idx), len(idx)))
        else:
            spacing = off.min()
            adj = ((d > 0) & (d <= 1.01 * spacing)).astype(float)
        b = a_wght * np.eye(len(idx)) - adj
        q[np.ix_(idx, idx)] = (b.T @ b) / w
    return TruePrecision(q, "lattice-sar")
