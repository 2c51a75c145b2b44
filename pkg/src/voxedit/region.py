"""Edit-region detection on the voxel grid.

Given an asset split into parts to edit and parts to keep, decide which
cells of the whole grid the generator may touch:

* addition: every empty cell;
* deletion: exactly the edited parts;
* modification: the edited parts, every empty cell outside the union of the
  kept parts' bounding boxes, and the empty cells inside those boxes whose
  k nearest asset voxels are mostly (strictly more than ``tau``) edited.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass

import numpy as np

from .errors import EmptySet, UnknownPart
from .voxel.geometry import KnnIndex, aabb_of, knn
from .voxel.grid import Aabb, GridDims, PartLabeling, VoxelCoord, VoxelMask, as_coord_array, sort_coords

log = logging.getLogger(__name__)


class EditType(enum.Enum):
    ADDITION = "addition"
    MODIFICATION = "modification"
    DELETION = "deletion"

    @classmethod
    def parse(cls, value) -> EditType:
        if isinstance(value, cls):
            return value
        return cls(str(value).strip().lower())


@dataclass(frozen=True, eq=False)
class Partition:
    """Asset voxels split into edited and preserved sets.

    ``pres_labels`` carries the part id of every preserved voxel (aligned with
    ``p_pres``) so one bounding box can be built per preserved part.
    """

    asset: np.ndarray
    p_edit: np.ndarray
    p_pres: np.ndarray
    pres_labels: np.ndarray

    def __post_init__(self):
        asset = sort_coords(self.asset)
        p_edit = sort_coords(self.p_edit)
        pres = as_coord_array(self.p_pres)
        labels = np.asarray(self.pres_labels, dtype=np.int64).reshape(-1)
        if len(labels) != len(pres):
            raise ValueError("one part id per preserved voxel required")
        order = np.lexsort((pres[:, 2], pres[:, 1], pres[:, 0]))
        pres, labels = pres[order], labels[order]
        if len(p_edit) + len(pres) != len(asset):
            raise ValueError("p_edit and p_pres must split the asset")
        merged = sort_coords(np.concatenate([p_edit, pres]))
        if not np.array_equal(merged, asset):
            raise ValueError("p_edit and p_pres must be disjoint and cover the asset")
        for name, val in (("asset", asset), ("p_edit", p_edit), ("p_pres", pres), ("pres_labels", labels)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)

    @classmethod
    def addition(cls, asset) -> Partition:
        """Everything preserved as a single part."""
        a = sort_coords(asset)
        return cls(a, np.zeros((0, 3), np.int64), a, np.zeros(len(a), np.int64))

    def edit_set(self) -> set[VoxelCoord]:
        return {tuple(int(v) for v in c) for c in self.p_edit}

    def pres_set(self) -> set[VoxelCoord]:
        return {tuple(int(v) for v in c) for c in self.p_pres}


@dataclass(frozen=True)
class RegionParams:
    k: int = 8
    tau: float = 0.5

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if not 0 < self.tau < 1:
            raise ValueError("tau must lie in (0, 1)")


def partition_from_labels(labeling: PartLabeling, edit_part_ids) -> Partition:
    ids = {int(i) for i in edit_part_ids}
    unknown = ids - labeling.present_ids()
    if unknown:
        raise UnknownPart(f"part ids {sorted(unknown)} are not present in the labeling")
    is_edit = np.isin(labeling.labels, sorted(ids))
    return Partition(
        labeling.coords,
        labeling.coords[is_edit],
        labeling.coords[~is_edit],
        labeling.labels[~is_edit],
    )


def prop_knn(v: VoxelCoord, partition: Partition, k: int) -> float:
    """Fraction of the k nearest asset voxels of ``v`` that are being edited."""
    if len(partition.asset) == 0:
        raise EmptySet("asset is empty")
    nearest = knn(v, partition.asset, k)
    edit = partition.edit_set()
    return sum(c in edit for c in nearest) / len(nearest)


def preserved_boxes(partition: Partition) -> list[Aabb]:
    """One box per preserved part id, in ascending id order."""
    return [aabb_of(partition.p_pres[partition.pres_labels == pid]) for pid in np.unique(partition.pres_labels)]


def _union_of_boxes(boxes: list[Aabb], dims: GridDims) -> np.ndarray:
    vol = np.zeros(dims.shape, dtype=bool)
    for b in boxes:
        (x0, y0, z0), (x1, y1, z1) = b.min, b.max
        vol[x0 : x1 + 1, y0 : y1 + 1, z0 : z1 + 1] = True
    return vol


def modification_candidates(partition: Partition, dims: GridDims) -> tuple[np.ndarray, np.ndarray]:
    """Union-of-boxes volume and the empty voxels inside it, lexicographic."""
    inside = _union_of_boxes(preserved_boxes(partition), dims)
    occ = np.zeros(dims.shape, dtype=bool)
    occ[tuple(partition.asset.T)] = True
    return inside, np.argwhere(inside & ~occ).astype(np.int64)


def compute_edit_region(edit_type: EditType, partition: Partition, dims: GridDims,
                        params: RegionParams = RegionParams()) -> VoxelMask:
    edit_type = EditType.parse(edit_type)
    dims = GridDims(dims.resolution)
    if edit_type is EditType.ADDITION:
        return VoxelMask.from_coords(dims, partition.asset).complement()
    if len(partition.p_edit) == 0:
        raise EmptySet(f"{edit_type.value} needs a non-empty edit part set")
    if edit_type is EditType.DELETION:
        return VoxelMask.from_coords(dims, partition.p_edit)
    if len(partition.p_pres) == 0:
        log.warning("modification without preserved parts: the whole grid becomes editable")
        return VoxelMask.full(dims)

    inside, cand = modification_candidates(partition, dims)
    region = ~inside
    region[tuple(partition.p_edit.T)] = True
    if len(cand):
        index = KnnIndex(partition.asset)
        nbrs = index.query(cand, params.k)
        edit_vol = np.zeros(dims.shape, dtype=bool)
        edit_vol[tuple(partition.p_edit.T)] = True
        is_edit = edit_vol[tuple(index.ref.T)]
        frac = is_edit[nbrs].sum(axis=1) / nbrs.shape[1]
        hit = cand[frac > params.tau]
        region[tuple(hit.T)] = True
    return VoxelMask(dims, region)


def preserved_mask(r_edit: VoxelMask) -> VoxelMask:
    return r_edit.complement()
