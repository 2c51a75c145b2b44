"""Part segmentation requests, the k-means fallback and part selection."""

from __future__ import annotations

import numpy as np
from sklearn.cluster import KMeans

from ..errors import BadPartCount, GuidanceSchemaFault
from .providers import Provider, bytes_sha256

GRANULARITIES = tuple(range(3, 9))


def _points(points) -> np.ndarray:
    p = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if len(p) == 0:
        raise ValueError("segmentation needs at least one point")
    if not np.isfinite(p).all():
        raise ValueError("point positions must be finite")
    return p


def points_digest(points) -> str:
    return bytes_sha256(np.ascontiguousarray(_points(points), dtype="<f8").tobytes())


def canonical_labels(labels: np.ndarray) -> np.ndarray:
    """Renumber clusters in order of first appearance."""
    labels = np.asarray(labels, dtype=np.int64)
    _, first = np.unique(labels, return_index=True)
    remap = np.empty(labels.max() + 1, dtype=np.int64)
    remap[labels[np.sort(first)]] = np.arange(len(first))
    return remap[labels]


def kmeans_segmentation(points, part_count: int, seed: int = 0) -> np.ndarray:
    """Toy geometric segmentation: seeded k-means on positions."""
    p = _points(points)
    if len(p) < part_count:
        raise BadPartCount(f"{len(p)} points cannot form {part_count} parts")
    km = KMeans(n_clusters=part_count, n_init=4, random_state=seed).fit(p)
    return canonical_labels(km.labels_)


def segmentation_key(points, part_count: int) -> dict:
    return {"kind": "parts", "part_count": part_count, "points": points_digest(points)}


def request_segmentation(points, part_count: int, provider: Provider | None = None, seed: int = 0) -> np.ndarray:
    """One part id in ``[0, part_count)`` per point."""
    if not GRANULARITIES[0] <= part_count <= GRANULARITIES[-1]:
        raise BadPartCount(f"part count {part_count} outside [3, 8]")
    p = _points(points)
    if provider is None:
        return kmeans_segmentation(p, part_count, seed)
    resp = provider.request("parts", segmentation_key(p, part_count),
                            {"extras": {"points": p.tolist(), "part_count": part_count}})
    labels = np.asarray(resp.get("labels", []) if isinstance(resp, dict) else [], dtype=np.int64)
    if labels.shape != (len(p),) or (labels.min() < 0 or labels.max() >= part_count):
        raise GuidanceSchemaFault("segmentation labels do not match the points or the part count")
    return labels


def multi_granularity_segment(points, provider: Provider | None = None, seed: int = 0) -> dict[int, np.ndarray]:
    p = _points(points)
    return {s: request_segmentation(p, s, provider, seed) for s in GRANULARITIES}


def is_degenerate(labels: np.ndarray, part_count: int, min_fraction: float = 0.02) -> bool:
    counts = np.bincount(labels, minlength=part_count)
    return bool((counts < max(1, min_fraction * len(labels))).any())


def choose_granularity(labelings: dict[int, np.ndarray], min_fraction: float = 0.02) -> int:
    """Largest part count whose clusters are all non-degenerate (fallback rule)."""
    ok = [s for s, lab in labelings.items() if not is_degenerate(lab, s, min_fraction)]
    return max(ok) if ok else min(labelings)


def part_selection_key(points, target_part_names, granularities) -> dict:
    return {
        "kind": "select",
        "points": points_digest(points),
        "target_part_names": list(target_part_names),
        "granularities": sorted(int(s) for s in granularities),
    }


def request_part_selection(points, labelings: dict[int, np.ndarray], target_part_names,
                           provider: Provider) -> tuple[int, list[int]]:
    """Granularity and part ids chosen as the edit parts."""
    key = part_selection_key(points, target_part_names, labelings)
    resp = provider.request("select", key, {"extras": {
        "target_part_names": list(target_part_names),
        "labelings": {str(s): lab.tolist() for s, lab in labelings.items()},
    }})
    try:
        s = int(resp["granularity"])
        ids = [int(i) for i in resp["edit_parts"]]
    except (KeyError, TypeError, ValueError):
        raise GuidanceSchemaFault("part selection needs 'granularity' and 'edit_parts'") from None
    if s not in labelings or any(not 0 <= i < s for i in ids):
        raise GuidanceSchemaFault(f"part selection {s}/{ids} is inconsistent with the segmentations")
    return s, ids
