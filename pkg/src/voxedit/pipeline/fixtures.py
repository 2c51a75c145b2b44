"""Scripted provider answers for synthetic runs.

A :class:`ScriptedResponder` plays the part of the remote models: it returns
a fixed guidance bundle, picks the clusters that overlap a ground-truth part,
chooses views with the visibility heuristic and "edits" images by appending
a tag to the source bytes. Paired with a recording provider it produces
fixture sets that later runs replay without any network access.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..guidance.parts import kmeans_segmentation
from ..guidance.providers import RecordingProvider
from ..region import EditType
from .synth import SyntheticAsset


@dataclass
class ScriptedResponder:
    bundle: dict
    target: np.ndarray | None = None  # per-point flags of the ground-truth edit part
    granularity: int = 3
    view_id: int = 0
    seed: int = 0

    def __call__(self, kind: str, key: dict, live: dict):
        extras = live.get("extras", {})
        if kind == "guidance":
            return dict(self.bundle)
        if kind == "view":
            return {"view_id": self.view_id}
        if kind == "image":
            return f"edited:{key['source']}:{key['part_description']}".encode()
        if kind == "parts":
            pts = np.asarray(extras["points"], dtype=np.float64)
            return {"labels": kmeans_segmentation(pts, extras["part_count"], self.seed).tolist()}
        if kind == "select":
            labels = np.asarray(extras["labelings"][str(self._granularity(extras))], dtype=np.int64)
            return {"granularity": self._granularity(extras), "edit_parts": self._pick(labels)}
        raise ValueError(f"no script for request kind {kind!r}")

    def _granularity(self, extras) -> int:
        available = sorted(int(s) for s in extras["labelings"])
        return self.granularity if self.granularity in available else available[0]

    def _pick(self, labels: np.ndarray) -> list[int]:
        """Clusters whose members are mostly inside the target part."""
        if self.target is None:
            return [0]
        ids = [int(c) for c in np.unique(labels) if self.target[labels == c].mean() > 0.5]
        if not ids:
            # the target is smaller than every cluster: take the one holding most of it
            ids = [int(np.bincount(labels[self.target], minlength=labels.max() + 1).argmax())]
        return ids


def synthetic_bundle(asset: SyntheticAsset, edit_type: EditType, part: int = 1,
                     new_part: str = "") -> dict:
    """A plausible guidance bundle for editing part ``part`` of a synthetic primitive."""
    name = asset.part_names[part]
    new_part = new_part or ("" if edit_type is EditType.DELETION else f"new {name}")
    shape = asset.shape
    return {
        "original_description": f"a {shape}",
        "target_part_names": [name] if edit_type is not EditType.ADDITION else ["whole object"],
        "edit_type": edit_type.value,
        "new_complete_description": f"a {shape} with {new_part}" if new_part else f"a {shape} without {name}",
        "new_part_description": new_part,
        "stage1_text": f"a {shape}",
        "stage2_text": f"a {shape} with {new_part}" if new_part else f"a {shape}",
    }


def scripted_provider(fixture_dir, asset: SyntheticAsset, edit_type: EditType, part: int = 1,
                      granularity: int = 3, seed: int = 0, new_part: str = "") -> RecordingProvider:
    """Recording provider whose answers target ``part`` of ``asset``."""
    target = asset.labels.labels == part
    responder = ScriptedResponder(synthetic_bundle(asset, edit_type, part, new_part), target,
                                  granularity, 0, seed)
    return RecordingProvider(fixture_dir, responder)
