"""Spatial basis construction: compactly supported radial bases on nodal
grids (single and multiresolution), global harmonic bases, sphere node
layouts, and map projections.

Basis matrices are dense n x ell arrays whose (i, j) entry is the j-th basis
function evaluated at the i-th location. Columns carry metadata describing
their origin (node index and resolution level, harmonic frequency, or a
global-covariate label), which downstream penalty construction relies on.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist


@dataclass
class NodeGrid:
    """Node locations and support radii for a compactly supported basis.

    Attributes
    ----------
    nodes : (ell, 2) array
        Node coordinates. Planar units for ``geometry="planar"``, degrees
        (lon, lat) for ``geometry="sphere"``.
    radii : (ell,) array
        Support radius per node, in node-coordinate units (great-circle
        radians for sphere grids). Strictly positive.
    levels : (ell,) int array
        Resolution level per node, 1-based.
    geometry : str
        Either ``"planar"`` or ``"sphere"``.
    """

    nodes: np.ndarray
    radii: np.ndarray
    levels: np.ndarray
    geometry: str = "planar"

    def __post_init__(self):
        self.nodes = np.atleast_2d(np.asarray(self.nodes, dtype=float))
        self.radii = np.asarray(self.radii, dtype=float)
        self.levels = np.asarray(self.levels, dtype=int)
        if self.nodes.shape[0] == 0:
            raise ValueError("node grid is empty")
        if np.any(self.radii <= 0):
            raise ValueError("all support radii must be strictly positive")
        if self.geometry not in ("planar", "sphere"):
            raise ValueError(f"unknown geometry {self.geometry!r}")

    def __len__(self) -> int:
        return self.nodes.shape[0]

    def distances_to(self, points: np.ndarray) -> np.ndarray:
        """Pairwise point-to-node distances, shape (n_points, ell)."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if self.geometry == "sphere":
            return great_circle_distance(points, self.nodes)
        return cdist(points, self.nodes)

    def pairwise_distances(self) -> np.ndarray:
        """Node-to-node distance matrix, shape (ell, ell)."""
        return self.distances_to(self.nodes)


@dataclass
class BasisMatrix:
    """Evaluated basis: values[i, j] = phi_j(s_i), plus per-column metadata."""

    values: np.ndarray
    column_meta: list[dict] = field(default_factory=list)
    grid: NodeGrid | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2:
            raise ValueError("basis values must be a 2-D array")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("basis values contain non-finite entries")
        if not self.column_meta:
            self.column_meta = [{"kind": "unspecified"}
                                for _ in range(self.values.shape[1])]
        if len(self.column_meta) != self.values.shape[1]:
            raise ValueError("column_meta length does not match column count")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def ell(self) -> int:
        return self.values.shape[1]

    @property
    def global_columns(self) -> list[int]:
        """Indices of columns flagged as global covariates."""
        return [j for j, m in enumerate(self.column_meta)
                if m.get("kind") == "global"]


def wendland_eval(d):
    """Compactly supported radial weight on normalized distance d >= 0.

    Implements w(d) = (1 - d)^6 (35 d^2 + 18 d + 3) / 3 on [0, 1] and 0
    beyond; w is continuous, nonincreasing, with w(0) = 1 and a C^1 join
    at d = 1. Accepts scalars or arrays.
    """
    d = np.asarray(d, dtype=float)
    if np.any(d < 0):
        raise ValueError("normalized distance must be nonnegative")
    inside = d <= 1.0
    dc = np.where(inside, d, 0.0)
    w = (1.0 - dc) ** 6 * (35.0 * dc**2 + 18.0 * dc + 3.0) / 3.0
    out = np.where(inside, w, 0.0)
    return float(out) if out.ndim == 0 else out


def build_single_grid(domain, counts, overlap: float = 2.5) -> NodeGrid:
    """Regular nx-by-ny node lattice over a rectangle, no buffer nodes.

    Parameters
    ----------
    domain : ((xmin, xmax), (ymin, ymax))
        Bounding rectangle; must have positive width on both axes.
    counts : (nx, ny)
        Lattice size along each axis, both >= 2.
    overlap : float
        Number of neighboring functions each basis function overlaps along
        an axial direction; support radius = overlap * lattice spacing
        (the larger spacing when the lattice is anisotropic).
    """
    (xmin, xmax), (ymin, ymax) = domain
    nx, ny = int(counts[0]), int(counts[1])
    if nx < 2 or ny < 2:
        raise ValueError("lattice needs at least 2 nodes per axis")
    if not (xmax > xmin and ymax > ymin):
        raise ValueError("degenerate domain rectangle")
    if overlap <= 0:
        raise ValueError("overlap must be positive")
    xs = np.linspace(xmin, xmax, nx)
    ys = np.linspace(ymin, ymax, ny)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    nodes = np.column_stack([gx.ravel(), gy.ravel()])
    spacing = max((xmax - xmin) / (nx - 1), (ymax - ymin) / (ny - 1))
    radius = overlap * spacing
    ell = nx * ny
    return NodeGrid(nodes, np.full(ell, radius), np.ones(ell, dtype=int))


def build_multires_grid(domain, coarse_count: int, levels: int,
                        overlap: float = 2.5) -> NodeGrid:
    """Concatenated node lattices at doubling resolutions.

    Level k (1-based) places a square lattice with coarse_count * 2**(k-1)
    nodes per axis; each level's support radius follows its own spacing.
    """
    if coarse_count < 2:
        raise ValueError("coarsest lattice needs at least 2 nodes per axis")
    if levels < 1:
        raise ValueError("need at least one resolution level")
    parts = []
    for k in range(1, levels + 1):
        c = coarse_count * 2 ** (k - 1)
        g = build_single_grid(domain, (c, c), overlap)
        parts.append((g.nodes, g.radii, np.full(len(g), k, dtype=int)))
    nodes = np.vstack([p[0] for p in parts])
    radii = np.concatenate([p[1] for p in parts])
    lev = np.concatenate([p[2] for p in parts])
    return NodeGrid(nodes, radii, lev)


def build_basis_matrix(locations, grid: NodeGrid) -> BasisMatrix:
    """Evaluate the compactly supported basis of ``grid`` at ``locations``.

    Entry (i, j) is wendland_eval(dist(s_i, node_j) / radius_j); entries are
    exactly zero whenever the location falls outside a node's support.
    """
    locations = np.atleast_2d(np.asarray(locations, dtype=float))
    if not np.all(np.isfinite(locations)):
        raise ValueError("locations contain non-finite entries")
    dist = grid.distances_to(locations)
    values = wendland_eval(dist / grid.radii[None, :])
    meta = [{"kind": "wendland", "node": int(j), "level": int(grid.levels[j])}
            for j in range(len(grid))]
    return BasisMatrix(values, meta, grid)


def build_harmonic_basis(locations, ell: int, n: int) -> BasisMatrix:
    """Global cosine basis cos(2 pi w . s) on the square [0, sqrt(n)]^2.

    Frequencies w = (k / sqrt(n), j / sqrt(n)) for k, j in 1..sqrt(ell);
    ``ell`` must be a perfect square so the pairwise combinations fill
    exactly ell columns.
    """
    root = int(round(np.sqrt(ell)))
    if root * root != ell:
        raise ValueError("harmonic basis size must be a perfect square")
    locations = np.atleast_2d(np.asarray(locations, dtype=float))
    sqrt_n = np.sqrt(n)
    ks = np.arange(1, root + 1)
    fx, fy = np.meshgrid(ks / sqrt_n, ks / sqrt_n, indexing="ij")
    freqs = np.column_stack([fx.ravel(), fy.ravel()])  # (ell, 2)
    values = np.cos(2.0 * np.pi * locations @ freqs.T)
    meta = [{"kind": "harmonic", "freq": (float(f[0]), float(f[1]))}
            for f in freqs]
    return BasisMatrix(values, meta, None)


def equispaced_sphere_nodes(count: int, overlap: float = 2.5) -> NodeGrid:
    """Nodes spread over the sphere with near-uniform great-circle spacing.

    Uses a generalized-spiral layout: latitudes step uniformly in z from
    pole to pole and longitudes advance by an increment that keeps
    neighboring points about one mean spacing apart. Support radii default
    to overlap * mean nearest-neighbor distance (great-circle radians).
    """
    if count < 2:
        raise ValueError("need at least two nodes")
    h = -1.0 + 2.0 * np.arange(count) / (count - 1)
    theta = np.arccos(np.clip(h, -1.0, 1.0))  # colatitude from north
    phi = np.zeros(count)
    for k in range(1, count - 1):
        phi[k] = (phi[k - 1] + 3.6 / np.sqrt(count * (1.0 - h[k] ** 2))) % (2 * np.pi)
    lat = 90.0 - np.degrees(theta)
    lon = np.degrees(phi)
    lon = (lon + 180.0) % 360.0 - 180.0
    nodes = np.column_stack([lon, lat])
    d = great_circle_distance(nodes, nodes)
    np.fill_diagonal(d, np.inf)
    mean_nn = float(np.mean(d.min(axis=1)))
    radii = np.full(count, overlap * mean_nn)
    return NodeGrid(nodes, radii, np.ones(count, dtype=int), geometry="sphere")


def great_circle_distance(a, b) -> np.ndarray:
    """Great-circle distance in radians on the unit sphere.

    ``a`` and ``b`` are arrays of (lon, lat) in degrees; returns the
    (len(a), len(b)) distance matrix.
    """
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    lon_a, lat_a = np.radians(a[:, 0])[:, None], np.radians(a[:, 1])[:, None]
    lon_b, lat_b = np.radians(b[:, 0])[None, :], np.radians(b[:, 1])[None, :]
    # haversine form, stable near zero separation
    dlat = lat_b - lat_a
    dlon = lon_b - lon_a
    s = np.sin(dlat / 2) ** 2 + np.cos(lat_a) * np.cos(lat_b) * np.sin(dlon / 2) ** 2
    return 2.0 * np.arcsin(np.sqrt(np.clip(s, 0.0, 1.0)))


def sinusoidal_project(lonlat, ref_radius: float = 1.0) -> np.ndarray:
    """Equal-area sinusoidal projection of (lon, lat) degrees to the plane.

    x = R * lon_rad * cos(lat_rad), y = R * lat_rad.
    """
    lonlat = np.atleast_2d(np.asarray(lonlat, dtype=float))
    lat = lonlat[:, 1]
    if np.any((lat < -90) | (lat > 90)):
        raise ValueError("latitude out of [-90, 90]")
    lon_rad = np.radians(lonlat[:, 0])
    lat_rad = np.radians(lat)
    out = np.column_stack([ref_radius * lon_rad * np.cos(lat_rad),
                           ref_radius * lat_rad])
    return out


def append_global_column(phi: BasisMatrix, covariate, label: str) -> BasisMatrix:
    """Append a covariate vector as one extra globally supported column."""
    covariate = np.asarray(covariate, dtype=float).ravel()
    if covariate.shape[0] != phi.n:
        raise ValueError(
            f"covariate length {covariate.shape[0]} != location count {phi.n}")
    if not np.all(np.isfinite(covariate)):
        raise ValueError("covariate contains non-finite entries")
    values = np.column_stack([phi.values, covariate])
    meta = list(phi.column_meta) + [{"kind": "global", "label": label}]
    return BasisMatrix(values, meta, phi.grid)
