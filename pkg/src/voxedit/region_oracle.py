"""Straight-line reference for edit-region detection.

Walks every grid cell and applies the three-case rule literally with plain
Python sets and an exhaustive neighbor sort. Kept deliberately free of the
vectorized helpers in :mod:`voxedit.region` so it can check them.
"""

from __future__ import annotations

import itertools


def _dist2(a, b):
    return (a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2 + (a[2] - b[2]) ** 2


def oracle_prop_knn(v, asset: list, p_edit: set, k: int) -> float:
    ranked = sorted(asset, key=lambda c: (_dist2(v, c), c))[:k]
    return sum(1 for c in ranked if c in p_edit) / len(ranked)


def oracle_edit_region(edit_type: str, resolution: int, asset, p_edit, pres_parts: dict,
                       k: int, tau: float) -> set:
    """Editable cells for one instance.

    ``pres_parts`` maps each preserved part id to its voxel list.
    """
    asset = {tuple(c) for c in asset}
    p_edit = {tuple(c) for c in p_edit}
    cube = list(itertools.product(range(resolution), repeat=3))
    if edit_type == "addition":
        return {v for v in cube if v not in asset}
    if edit_type == "deletion":
        return set(p_edit)

    boxes = []
    for voxels in pres_parts.values():
        xs, ys, zs = zip(*voxels)
        boxes.append(((min(xs), min(ys), min(zs)), (max(xs), max(ys), max(zs))))
    if not boxes:
        return set(cube)

    def in_bbox_pres(v):
        return any(all(lo[i] <= v[i] <= hi[i] for i in range(3)) for lo, hi in boxes)

    asset_list = sorted(asset)
    region = set()
    for v in cube:
        if v in p_edit:
            region.add(v)
        elif v in asset:
            continue
        elif not in_bbox_pres(v):
            region.add(v)
        elif oracle_prop_knn(v, asset_list, p_edit, k) > tau:
            region.add(v)
    return region
