"""Dimension-generic convex geometry: hulls, ray queries, inradii, volumes.

Everything here works for 2 <= d <= 6 and treats flat (degenerate) point sets
as first-class values: a polytope that does not span the full space has an
affine_rank below dim, carries no facets, and all ball-radius quantities on it
are zero.  Facet halfspaces use the convention normal . x <= offset with unit
normals, so offsets are geometric distances from the origin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from . import kernels
from .errors import DegenerateInputError, InvalidInputError

# Rank cutoff: singular values above this fraction of the largest count.
RANK_REL_TOL = 1e-9
# Facet planes agreeing componentwise within this are merged.
FACET_MERGE_TOL = 1e-9
# Every hull input point must satisfy every output facet this tightly.
VERTEX_FACET_TOL = 1e-7


class Hyperplane(NamedTuple):
    """Halfspace normal . x <= offset with ||normal|| = 1."""

    normal: np.ndarray
    offset: float


@dataclass(frozen=True, eq=False)
class Polytope:
    """Convex body with vertex and (when full-dimensional) facet data.

    vertices holds the extreme points only.  facet_normals / facet_offsets
    are deduplicated geometric facets; facet_simplices triangulates the
    boundary with rows of indices into vertices and exists only for hulls
    built from points (it drives the fan volume).
    """

    dim: int
    vertices: np.ndarray
    facet_normals: np.ndarray
    facet_offsets: np.ndarray
    affine_rank: int
    interior_point: np.ndarray | None = None
    facet_simplices: np.ndarray | None = None

    @property
    def is_full_dimensional(self) -> bool:
        return self.affine_rank == self.dim

    @property
    def facets(self) -> tuple[Hyperplane, ...]:
        return tuple(
            Hyperplane(self.facet_normals[i], float(self.facet_offsets[i]))
            for i in range(self.facet_offsets.shape[0])
        )

    @classmethod
    def from_halfspaces(cls, normals, offsets, dim: int | None = None) -> "Polytope":
        """Build a facet-only polytope (no vertex enumeration).

        The set is declared full-dimensional; ray queries work on it, the
        fan volume does not (there is no triangulation to fan over).
        """
        n = np.asarray(normals, dtype=float)
        b = np.asarray(offsets, dtype=float)
        if n.ndim != 2 or n.shape[0] != b.shape[0] or n.shape[0] == 0:
            raise InvalidInputError("need matching nonempty normals and offsets")
        d = n.shape[1] if dim is None else int(dim)
        if n.shape[1] != d:
            raise InvalidInputError("normal dimension mismatch")
        if not (np.all(np.isfinite(n)) and np.all(np.isfinite(b))):
            raise InvalidInputError("non-finite halfspace data")
        lens = np.linalg.norm(n, axis=1)
        if np.any(lens < 1e-12):
            raise InvalidInputError("zero facet normal")
        return cls(
            dim=d,
            vertices=np.zeros((0, d)),
            facet_normals=n / lens[:, None],
            facet_offsets=b / lens,
            affine_rank=d,
            interior_point=None,
            facet_simplices=None,
        )


def affine_rank_of(points: np.ndarray, rel_tol: float = RANK_REL_TOL) -> int:
    """Rank of the centered point matrix with a relative singular-value cutoff."""
    pts = np.asarray(points, dtype=float)
    if pts.shape[0] <= 1:
        return 0
    centered = pts - pts.mean(axis=0)
    svals = np.linalg.svd(centered, compute_uv=False)
    if svals.size == 0 or svals[0] <= 0.0:
        return 0
    return int(np.count_nonzero(svals > rel_tol * svals[0]))


def support_function(points, directions) -> np.ndarray:
    """max over the point set of u . x, for each direction u (brute force)."""
    pts = np.asarray(points, dtype=float)
    dirs = np.atleast_2d(np.asarray(directions, dtype=float))
    return (dirs @ pts.T).max(axis=1)


def _dedupe_facets(normals: np.ndarray, offsets: np.ndarray, tol: float = FACET_MERGE_TOL):
    """Merge near-identical facet planes (triangulated hulls repeat them)."""
    rows = np.column_stack([normals, offsets])
    rows = np.unique(rows, axis=0)
    order = np.lexsort(rows.T[::-1])
    rows = rows[order]
    keep = np.ones(rows.shape[0], dtype=bool)
    last = 0
    for i in range(1, rows.shape[0]):
        if np.max(np.abs(rows[i] - rows[last])) <= tol:
            keep[i] = False
        else:
            last = i
    rows = rows[keep]
    return rows[:, :-1], rows[:, -1]


def _degenerate_hull(pts: np.ndarray, d: int, rank: int) -> Polytope:
    """Extreme points of a flat point set, found inside its affine span."""
    if rank == 0:
        vertices = pts[:1].copy()
    else:
        mean = pts.mean(axis=0)
        centered = pts - mean
        _, _, vt = np.linalg.svd(centered, full_matrices=False)
        proj = centered @ vt[:rank].T
        if rank == 1:
            idx = np.unique([int(np.argmin(proj[:, 0])), int(np.argmax(proj[:, 0]))])
        else:
            try:
                idx = ConvexHull(proj).vertices
            except QhullError:
                try:
                    idx = ConvexHull(proj, qhull_options="QJ").vertices
                except QhullError:
                    idx = np.arange(pts.shape[0])
        vertices = pts[np.sort(np.asarray(idx, dtype=int))]
    return Polytope(
        dim=d,
        vertices=vertices,
        facet_normals=np.zeros((0, d)),
        facet_offsets=np.zeros(0),
        affine_rank=rank,
        interior_point=None,
        facet_simplices=None,
    )


def convex_hull(points, dim: int | None = None) -> Polytope:
    """Convex hull of a point set in R^d, 2 <= d <= 6.

    Full-rank inputs get facets and an interior point (the vertex centroid);
    flat inputs come back degenerate with extreme points only.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 1:
        raise InvalidInputError("points must be a nonempty (n, d) array")
    d = pts.shape[1] if dim is None else int(dim)
    if pts.shape[1] != d:
        raise InvalidInputError(f"points have dimension {pts.shape[1]}, expected {d}")
    if not (2 <= d <= 6):
        raise InvalidInputError(f"dimension {d} outside supported range [2, 6]")
    if not np.all(np.isfinite(pts)):
        raise InvalidInputError("non-finite coordinates in point set")

    rank = affine_rank_of(pts)
    if rank < d:
        return _degenerate_hull(pts, d, rank)

    try:
        hull = ConvexHull(pts)
    except QhullError:
        opts = "QJ Qx" if d > 4 else "QJ"
        hull = ConvexHull(pts, qhull_options=opts)

    vidx = np.asarray(hull.vertices, dtype=int)
    vertices = pts[vidx]
    remap = np.full(pts.shape[0], -1, dtype=int)
    remap[vidx] = np.arange(vidx.size)
    simplices = remap[hull.simplices]

    raw_normals = hull.equations[:, :-1]
    raw_offsets = -hull.equations[:, -1]
    lens = np.linalg.norm(raw_normals, axis=1)
    normals, offsets = _dedupe_facets(raw_normals / lens[:, None], raw_offsets / lens)

    return Polytope(
        dim=d,
        vertices=vertices,
        facet_normals=normals,
        facet_offsets=offsets,
        affine_rank=d,
        interior_point=vertices.mean(axis=0),
        facet_simplices=simplices,
    )


def _check_unit_directions(poly_dim: int, directions) -> np.ndarray:
    dirs = np.atleast_2d(np.asarray(directions, dtype=float))
    if dirs.ndim != 2 or dirs.shape[1] != poly_dim:
        raise InvalidInputError("direction dimension mismatch")
    if not np.all(np.isfinite(dirs)):
        raise InvalidInputError("non-finite direction")
    lens = np.linalg.norm(dirs, axis=1)
    if np.any(np.abs(lens - 1.0) > 1e-6):
        raise InvalidInputError("directions must be unit vectors")
    return dirs


def ray_exit_distances(poly: Polytope, directions) -> np.ndarray:
    """Distance from the origin to the boundary of poly along each unit ray.

    Zero when the origin lies outside poly (that direction is already lost),
    +inf along directions no facet bounds (possible only for halfspace-built
    sets).  Degenerate polytopes have no exit distance and raise.
    """
    if not poly.is_full_dimensional:
        raise DegenerateInputError("ray exit undefined for a flat polytope")
    if poly.facet_offsets.shape[0] == 0:
        raise InvalidInputError("polytope has no facets")
    dirs = _check_unit_directions(poly.dim, directions)
    offs = poly.facet_offsets
    scale = max(1.0, float(np.max(np.abs(offs))))
    if float(offs.min()) < -1e-9 * scale:
        return np.zeros(dirs.shape[0])
    return kernels.ray_exit_batch(poly.facet_normals, offs, dirs)


def ray_exit_distance(poly: Polytope, direction) -> float:
    return float(ray_exit_distances(poly, direction)[0])


def min_facet_distance(poly: Polytope) -> float:
    """Radius of the largest origin-centered ball inside poly.

    Zero when the origin is on or outside the boundary, and zero for
    degenerate polytopes (a flat wrench hull resists no ball of
    disturbances).
    """
    if not poly.is_full_dimensional or poly.facet_offsets.shape[0] == 0:
        return 0.0
    m = float(poly.facet_offsets.min())
    return m if m > 0.0 else 0.0


def polytope_volume(poly: Polytope) -> float:
    """Hypervolume via a simplex fan from the interior point to each facet."""
    if not poly.is_full_dimensional:
        return 0.0
    if poly.facet_simplices is None or poly.interior_point is None:
        raise InvalidInputError("volume needs a vertex-built polytope")
    mats = poly.vertices[poly.facet_simplices] - poly.interior_point
    return kernels.det_abs_sum(mats) / math.factorial(poly.dim)


def halfspace_intersection_distance(a: Polytope, b: Polytope) -> float:
    """Radius of the largest origin-centered ball inside the intersection.

    The combined facet set bounds the ball, so this is just the smaller of
    the two single-body radii; zero if the origin is outside either body.
    """
    if a.dim != b.dim:
        raise InvalidInputError(f"dimension mismatch: {a.dim} vs {b.dim}")
    return min(min_facet_distance(a), min_facet_distance(b))
