"""Geometry on voxel coordinate sets: boxes, nearest neighbors, voting,
mask rescaling and Chamfer distance."""

from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree

from ..errors import BadFactor, EmptySet
from .grid import Aabb, GridDims, PartLabeling, VoxelCoord, VoxelMask, as_coord_array, sort_coords


def aabb_of(coords) -> Aabb:
    a = as_coord_array(coords)
    if len(a) == 0:
        raise EmptySet("bounding box of an empty set")
    lo, hi = a.min(axis=0), a.max(axis=0)
    return Aabb(tuple(int(v) for v in lo), tuple(int(v) for v in hi))


def _squared_dist(query: np.ndarray, ref: np.ndarray) -> np.ndarray:
    d = ref[None, :, :] - query[:, None, :]
    return np.einsum("qnk,qnk->qn", d, d)


def knn(query: VoxelCoord, reference, k: int) -> list[VoxelCoord]:
    """The ``min(k, |reference|)`` nearest reference voxels to ``query``.

    Exhaustive scan. Distances are compared as exact integer squares; equal
    distances are ordered lexicographically. Repeated coordinates count once.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    ref = np.unique(as_coord_array(reference), axis=0)
    if len(ref) == 0:
        raise EmptySet("knn over an empty reference set")
    d2 = _squared_dist(np.asarray([query], dtype=np.int64), ref)[0]
    # stable sort keeps the lexicographic order of ``ref`` inside ties
    order = np.argsort(d2, kind="stable")[:k]
    return [tuple(int(v) for v in ref[i]) for i in order]


class KnnIndex:
    """Batched k-nearest-neighbor lookup with the same tie rule as :func:`knn`.

    A KD-tree proposes ``k + slack`` candidates per query; rows whose
    candidate list could hide a tie at the k-th distance are redone with a
    radius query, so the answer is always exact.
    """

    def __init__(self, reference, slack: int = 8):
        self.ref = sort_coords(reference)
        if len(self.ref) == 0:
            raise EmptySet("knn over an empty reference set")
        self.tree = cKDTree(self.ref.astype(np.float64))
        self.slack = slack

    def query(self, queries, k: int) -> np.ndarray:
        """Row indices into ``self.ref``, shape ``(len(queries), min(k, n))``."""
        q = as_coord_array(queries)
        n = len(self.ref)
        k = min(k, n)
        if len(q) == 0:
            return np.zeros((0, k), dtype=np.int64)
        m = min(k + self.slack, n)
        _, idx = self.tree.query(q.astype(np.float64), k=m)
        idx = np.asarray(idx, dtype=np.int64).reshape(len(q), m)
        d2 = ((self.ref[idx] - q[:, None, :]) ** 2).sum(axis=2)
        key = d2 * n + idx
        key.sort(axis=1)
        out = key[:, :k] % n
        if m < n:
            kth = key[:, k - 1] // n
            # a candidate beyond the list could tie with the k-th distance
            unsafe = np.nonzero(key[:, m - 1] // n <= kth)[0]
            for row in unsafe:
                r = np.sqrt(float(kth[row])) + 1e-6
                cand = np.asarray(self.tree.query_ball_point(q[row].astype(np.float64), r), dtype=np.int64)
                cd2 = ((self.ref[cand] - q[row]) ** 2).sum(axis=1)
                ck = np.sort(cd2 * n + cand)
                out[row] = ck[:k] % n
        return out


def point_to_voxel(points: np.ndarray, resolution: int) -> np.ndarray:
    """Map positions in ``[0, 1]^3`` to voxel indices ``floor(p * R)`` clamped to the cube."""
    p = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    v = np.floor(p * resolution).astype(np.int64)
    return np.clip(v, 0, resolution - 1)


def voxel_centers(coords, resolution: int) -> np.ndarray:
    return (as_coord_array(coords).astype(np.float64) + 0.5) / resolution


def majority_vote_labels(points, labels, dims: GridDims, part_count: int | None = None) -> PartLabeling:
    """Per-voxel majority label of the points falling in each voxel.

    Ties go to the smallest part id; voxels without points stay unlabeled.
    """
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    if part_count is None:
        part_count = int(labels.max()) + 1 if len(labels) else 0
    if len(labels) == 0:
        return PartLabeling(dims, np.zeros((0, 3), np.int64), labels, part_count)
    if labels.min() < 0:
        raise ValueError("part ids must be non-negative")
    vox = point_to_voxel(points, dims.resolution)
    r = dims.resolution
    flat = (vox[:, 0] * r + vox[:, 1]) * r + vox[:, 2]
    cells, inverse = np.unique(flat, return_inverse=True)
    hist = np.zeros((len(cells), part_count), dtype=np.int64)
    np.add.at(hist, (inverse, labels), 1)
    # argmax returns the first maximum, i.e. the smallest id among ties
    winners = hist.argmax(axis=1)
    coords = np.stack(np.unravel_index(cells, dims.shape), axis=1)
    return PartLabeling(dims, coords, winners, part_count)


def downscale_mask(mask: VoxelMask, factor: int, rho: float = 0.5) -> VoxelMask:
    """Coarse mask whose cells hold at least a ``rho`` fraction of fine members."""
    r = mask.dims.resolution
    if factor < 1 or r % factor:
        raise BadFactor(f"factor {factor} does not divide resolution {r}")
    if not 0 < rho <= 1:
        raise ValueError("rho must lie in (0, 1]")
    c = r // factor
    counts = mask.dense.reshape(c, factor, c, factor, c, factor).sum(axis=(1, 3, 5))
    return VoxelMask(GridDims(c, mask.dims.channels), counts / factor**3 >= rho)


def chamfer_distance(a, b) -> float:
    """Symmetric mean nearest-neighbor distance between two voxel-center sets."""
    pa = as_coord_array(a).astype(np.float64)
    pb = as_coord_array(b).astype(np.float64)
    if len(pa) == 0 or len(pb) == 0:
        raise EmptySet("chamfer distance needs two non-empty sets")
    da, _ = cKDTree(pb).query(pa, k=1)
    db, _ = cKDTree(pa).query(pb, k=1)
    return 0.5 * (float(np.mean(da)) + float(np.mean(db)))
