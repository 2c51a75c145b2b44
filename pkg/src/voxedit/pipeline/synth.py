"""Synthetic voxel assets with ground-truth parts for desk-scale runs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..flow.core import CondKind, Condition, one_hot_condition
from ..voxel.grid import GridDims, LatentGrid, PartLabeling

SHAPES = ("sphere", "box", "dumbbell")
PART_NAMES = {
    "sphere": ("body", "cap"),
    "box": ("body", "lid"),
    "dumbbell": ("weights", "handle"),
}


@dataclass(frozen=True)
class SyntheticAsset:
    shape: str
    grid: LatentGrid
    labels: PartLabeling
    part_names: tuple[str, ...]

    @property
    def class_index(self) -> int:
        return SHAPES.index(self.shape)

    def condition(self, kind: CondKind = CondKind.TEXT) -> Condition:
        return one_hot_condition(self.class_index, kind)


def _centers(r: int) -> np.ndarray:
    return np.indices((r, r, r)).reshape(3, -1).T.astype(np.float64) + 0.5


def sphere_occupancy(resolution: int, radius: float, center=None) -> np.ndarray:
    """Boolean volume of voxels whose centers lie within ``radius`` of ``center``."""
    c = np.full(3, resolution / 2.0) if center is None else np.asarray(center, dtype=np.float64)
    d = np.linalg.norm(_centers(resolution) - c, axis=1)
    return (d <= radius).reshape((resolution,) * 3)


def _shape_volume(shape: str, r: int, scale: float, offset):
    """Occupancy volume and per-voxel part ids for one primitive."""
    p = _centers(r)
    c = np.full(3, r / 2.0) + np.asarray(offset, dtype=np.float64)
    q = p - c
    if shape == "sphere":
        rad = 0.3 * r * scale
        occ = np.linalg.norm(q, axis=1) <= rad
        part = (q[:, 2] > 0.5 * rad).astype(np.int64)
    elif shape == "box":
        half = np.array([0.3, 0.25, 0.2]) * r * scale
        occ = np.all(np.abs(q) <= half, axis=1)
        part = (q[:, 2] > half[2] - 1.0).astype(np.int64)
    elif shape == "dumbbell":
        rad = 0.15 * r * scale
        sep = 0.25 * r * scale
        left = np.linalg.norm(q - [-sep, 0, 0], axis=1) <= rad
        right = np.linalg.norm(q - [sep, 0, 0], axis=1) <= rad
        bar_r = max(0.06 * r * scale, 0.75)
        bar = (np.abs(q[:, 0]) <= sep) & (np.linalg.norm(q[:, 1:], axis=1) <= bar_r)
        occ = left | right | bar
        part = (bar & ~left & ~right).astype(np.int64)
    else:
        raise ValueError(f"unknown shape {shape!r}; choose from {SHAPES}")
    return occ, part


def smooth_features(coords: np.ndarray, resolution: int, channels: int, class_index: int,
                    rng: np.random.Generator, noise: float = 0.05) -> np.ndarray:
    pos = (coords.astype(np.float64) + 0.5) / resolution * 2.0 - 1.0
    k = np.arange(channels)
    freq = 1.0 + (k % 3)
    axis = k % 3
    phase = 0.7 * class_index + 0.3 * k
    base = np.sin(np.pi * freq * pos[:, axis] + phase)
    return 0.8 * base + noise * rng.standard_normal((len(coords), channels))


def make_synthetic_asset(shape: str, dims: GridDims, seed: int, scale: float = 1.0,
                         offset=(0.0, 0.0, 0.0)) -> SyntheticAsset:
    """Deterministic primitive with smooth features and two ground-truth parts."""
    r = dims.resolution
    occ, part = _shape_volume(shape, r, scale, offset)
    coords = np.argwhere(occ.reshape((r,) * 3)).astype(np.int64)
    part_vol = part.reshape((r,) * 3)
    rng = np.random.default_rng(seed)
    feats = smooth_features(coords, r, dims.channels, SHAPES.index(shape), rng)
    grid = LatentGrid(dims, coords, feats)
    labels = PartLabeling(dims, coords, part_vol[tuple(coords.T)], 2)
    return SyntheticAsset(shape, grid, labels, PART_NAMES[shape])


def synthetic_dataset(dims: GridDims, count: int, seed: int, shapes=SHAPES) -> list[SyntheticAsset]:
    """Primitives with jittered scale and offset, cycling through ``shapes``."""
    rng = np.random.default_rng(seed)
    out = []
    for i in range(count):
        shape = shapes[i % len(shapes)]
        scale = float(rng.uniform(0.8, 1.1))
        offset = rng.uniform(-1.0, 1.0, size=3) * dims.resolution / 16
        out.append(make_synthetic_asset(shape, dims, int(rng.integers(2**31)), scale, offset))
    return out
