"""Sparse voxel containers.

Coordinates are integer triples in ``[0, R)``. Containers keep their
coordinates as an ``(n, 3)`` int64 array in lexicographic (x, y, z) order so
that iteration, serialization and hashing are deterministic. All arrays are
frozen (``writeable=False``) after construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from ..errors import ShapeFault

VoxelCoord = tuple[int, int, int]

STAGE1_RESOLUTION = 16
STAGE2_RESOLUTION = 64


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


def as_coord_array(coords) -> np.ndarray:
    """Convert an iterable of triples (or an array) to an ``(n, 3)`` int64 array."""
    if isinstance(coords, np.ndarray):
        a = coords.astype(np.int64, copy=False)
    else:
        coords = list(coords)
        a = np.array(coords, dtype=np.int64) if coords else np.zeros((0, 3), np.int64)
    return a.reshape(-1, 3)


def lex_order(coords: np.ndarray) -> np.ndarray:
    """Permutation that sorts coordinates by x, then y, then z."""
    return np.lexsort((coords[:, 2], coords[:, 1], coords[:, 0]))


def sort_coords(coords) -> np.ndarray:
    a = as_coord_array(coords)
    return a[lex_order(a)]


@dataclass(frozen=True)
class GridDims:
    resolution: int
    channels: int = 1

    def __post_init__(self):
        if self.resolution < 1 or self.channels < 1:
            raise ShapeFault(f"invalid grid dims R={self.resolution} D={self.channels}")

    @property
    def shape(self) -> tuple[int, int, int]:
        r = self.resolution
        return (r, r, r)

    @property
    def size(self) -> int:
        return self.resolution**3

    def contains(self, coords: np.ndarray) -> np.ndarray:
        return np.all((coords >= 0) & (coords < self.resolution), axis=-1)

    def all_coords(self) -> np.ndarray:
        """Every cell of the cube in lexicographic order."""
        r = self.resolution
        g = np.indices((r, r, r)).reshape(3, -1).T
        return g.astype(np.int64)

    def with_channels(self, channels: int) -> GridDims:
        return GridDims(self.resolution, channels)


def _check_in_cube(dims: GridDims, coords: np.ndarray):
    if len(coords) and not dims.contains(coords).all():
        raise ShapeFault(f"coordinates outside the {dims.resolution}^3 cube")


@dataclass(frozen=True, eq=False)
class LatentGrid:
    """Occupied voxels with one D-channel feature vector each."""

    dims: GridDims
    coords: np.ndarray
    features: np.ndarray

    def __post_init__(self):
        coords = as_coord_array(self.coords)
        feats = np.asarray(self.features, dtype=np.float64)
        if feats.ndim == 1 and self.dims.channels == 1:
            feats = feats.reshape(-1, 1)
        if feats.shape != (len(coords), self.dims.channels):
            raise ShapeFault(
                f"features shape {feats.shape} does not match "
                f"({len(coords)}, {self.dims.channels})"
            )
        _check_in_cube(self.dims, coords)
        order = lex_order(coords)
        coords, feats = coords[order], feats[order]
        if len(coords) > 1 and (np.diff(coords, axis=0) == 0).all(axis=1).any():
            raise ShapeFault("duplicate voxel coordinates")
        object.__setattr__(self, "coords", _frozen(coords))
        object.__setattr__(self, "features", _frozen(feats))

    @classmethod
    def from_cells(cls, dims: GridDims, cells: Mapping[VoxelCoord, Sequence[float]]) -> LatentGrid:
        keys = list(cells)
        feats = [list(cells[k]) for k in keys]
        return cls(dims, as_coord_array(keys), np.array(feats, dtype=np.float64).reshape(len(keys), dims.channels))

    def __len__(self):
        return len(self.coords)

    def __iter__(self):
        for c, f in zip(self.coords, self.features):
            yield (int(c[0]), int(c[1]), int(c[2])), f

    def __eq__(self, other):
        if not isinstance(other, LatentGrid):
            return NotImplemented
        return (
            self.dims == other.dims
            and np.array_equal(self.coords, other.coords)
            and self.features.tobytes() == other.features.tobytes()
        )

    def cells(self) -> dict[VoxelCoord, np.ndarray]:
        return dict(iter(self))

    def occupancy(self) -> VoxelMask:
        return VoxelMask.from_coords(self.dims, self.coords)

    def coord_set(self) -> set[VoxelCoord]:
        return {tuple(int(v) for v in c) for c in self.coords}

    def index_volume(self) -> np.ndarray:
        """Dense ``R^3`` array holding the row index of each voxel, or -1."""
        vol = np.full(self.dims.shape, -1, dtype=np.int64)
        vol[tuple(self.coords.T)] = np.arange(len(self.coords))
        return vol

    def rows_of(self, coords: np.ndarray) -> np.ndarray:
        """Row indices of ``coords`` in this grid (-1 where unoccupied)."""
        coords = as_coord_array(coords)
        return self.index_volume()[tuple(coords.T)]

    def subset(self, keep: np.ndarray) -> LatentGrid:
        """Grid restricted to voxels whose boolean ``keep`` entry is set."""
        return LatentGrid(self.dims, self.coords[keep], self.features[keep])


@dataclass(frozen=True, eq=False)
class VoxelMask:
    """Hard region of the grid cube, stored densely."""

    dims: GridDims
    dense: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.dense, dtype=bool)
        if d.shape != self.dims.shape:
            raise ShapeFault(f"mask volume {d.shape} does not match {self.dims.shape}")
        object.__setattr__(self, "dense", _frozen(d))

    @classmethod
    def from_coords(cls, dims: GridDims, coords: Iterable[VoxelCoord] | np.ndarray) -> VoxelMask:
        a = as_coord_array(coords)
        _check_in_cube(dims, a)
        vol = np.zeros(dims.shape, dtype=bool)
        vol[tuple(a.T)] = True
        return cls(dims, vol)

    @classmethod
    def empty(cls, dims: GridDims) -> VoxelMask:
        return cls(dims, np.zeros(dims.shape, dtype=bool))

    @classmethod
    def full(cls, dims: GridDims) -> VoxelMask:
        return cls(dims, np.ones(dims.shape, dtype=bool))

    @property
    def members(self) -> set[VoxelCoord]:
        return {tuple(int(v) for v in c) for c in self.coords()}

    def coords(self) -> np.ndarray:
        # np.argwhere walks C order, which is the lexicographic order.
        return np.argwhere(self.dense).astype(np.int64)

    def __len__(self):
        return int(self.dense.sum())

    def __contains__(self, c) -> bool:
        return bool(self.dense[tuple(c)])

    def __eq__(self, other):
        if not isinstance(other, VoxelMask):
            return NotImplemented
        return self.dims.resolution == other.dims.resolution and np.array_equal(self.dense, other.dense)

    def contains(self, coords: np.ndarray) -> np.ndarray:
        coords = as_coord_array(coords)
        return self.dense[tuple(coords.T)]

    def complement(self) -> VoxelMask:
        return VoxelMask(self.dims, ~self.dense)

    def __or__(self, other: VoxelMask) -> VoxelMask:
        return VoxelMask(self.dims, self.dense | other.dense)

    def __and__(self, other: VoxelMask) -> VoxelMask:
        return VoxelMask(self.dims, self.dense & other.dense)

    def __sub__(self, other: VoxelMask) -> VoxelMask:
        return VoxelMask(self.dims, self.dense & ~other.dense)


@dataclass(frozen=True, eq=False)
class SoftMask:
    """Per-voxel blend weights in [0, 1]; absent voxels are weight 0."""

    dims: GridDims
    dense: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.dense, dtype=np.float64)
        if w.shape != self.dims.shape:
            raise ShapeFault(f"weight volume {w.shape} does not match {self.dims.shape}")
        if not ((w >= 0) & (w <= 1)).all():
            raise ValueError("soft mask weights must lie in [0, 1]")
        object.__setattr__(self, "dense", _frozen(w))

    @classmethod
    def from_hard(cls, mask: VoxelMask) -> SoftMask:
        return cls(mask.dims, mask.dense.astype(np.float64))

    @property
    def weights(self) -> dict[VoxelCoord, float]:
        nz = np.argwhere(self.dense > 0)
        return {tuple(int(v) for v in c): float(self.dense[tuple(c)]) for c in nz}

    def at(self, coords: np.ndarray) -> np.ndarray:
        coords = as_coord_array(coords)
        return self.dense[tuple(coords.T)]

    def is_hard(self) -> bool:
        return bool(((self.dense == 0) | (self.dense == 1)).all())


@dataclass(frozen=True)
class Aabb:
    """Inclusive axis-aligned box in voxel units."""

    min: VoxelCoord
    max: VoxelCoord

    def __post_init__(self):
        if any(a > b for a, b in zip(self.min, self.max)):
            raise ValueError(f"inverted box {self.min} > {self.max}")

    def contains(self, coords: np.ndarray) -> np.ndarray:
        coords = as_coord_array(coords)
        lo, hi = np.array(self.min), np.array(self.max)
        return np.all((coords >= lo) & (coords <= hi), axis=1)

    def to_mask(self, dims: GridDims) -> VoxelMask:
        vol = np.zeros(dims.shape, dtype=bool)
        (x0, y0, z0), (x1, y1, z1) = self.min, self.max
        vol[x0 : x1 + 1, y0 : y1 + 1, z0 : z1 + 1] = True
        return VoxelMask(dims, vol)


@dataclass(frozen=True, eq=False)
class PartLabeling:
    dims: GridDims
    coords: np.ndarray
    labels: np.ndarray
    part_count: int

    def __post_init__(self):
        coords = as_coord_array(self.coords)
        labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        if len(labels) != len(coords):
            raise ShapeFault("one label per coordinate required")
        if len(labels) and (labels.min() < 0 or labels.max() >= self.part_count):
            raise ValueError(f"part ids must lie in [0, {self.part_count})")
        order = lex_order(coords)
        object.__setattr__(self, "coords", _frozen(coords[order]))
        object.__setattr__(self, "labels", _frozen(labels[order]))

    @classmethod
    def from_map(cls, dims: GridDims, labels: Mapping[VoxelCoord, int], part_count: int | None = None):
        keys = list(labels)
        vals = [int(labels[k]) for k in keys]
        if part_count is None:
            part_count = max(vals) + 1 if vals else 0
        return cls(dims, as_coord_array(keys), np.array(vals, dtype=np.int64), part_count)

    def as_map(self) -> dict[VoxelCoord, int]:
        return {tuple(int(v) for v in c): int(l) for c, l in zip(self.coords, self.labels)}

    def present_ids(self) -> set[int]:
        return {int(v) for v in np.unique(self.labels)}

    def __len__(self):
        return len(self.coords)
