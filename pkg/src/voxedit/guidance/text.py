"""Text guidance: the decomposed edit description and a toy text encoder."""

from __future__ import annotations

import hashlib
import re
from dataclasses import asdict, dataclass

import numpy as np

from ..errors import GuidanceSchemaFault
from ..flow.core import EMBED_DIM, CondKind, Condition
from ..region import EditType
from .providers import Provider, load_template
from .views import ViewSet

BUNDLE_FIELDS = (
    "original_description",
    "target_part_names",
    "edit_type",
    "new_complete_description",
    "new_part_description",
    "stage1_text",
    "stage2_text",
)


@dataclass(frozen=True)
class GuidanceBundle:
    original_description: str
    target_part_names: tuple[str, ...]
    edit_type: EditType
    new_complete_description: str
    new_part_description: str
    stage1_text: str
    stage2_text: str

    def to_json(self) -> dict:
        d = asdict(self)
        d["edit_type"] = self.edit_type.value
        d["target_part_names"] = list(self.target_part_names)
        return d


def parse_bundle(raw) -> GuidanceBundle:
    """Validate a provider response and turn it into a bundle."""
    if not isinstance(raw, dict):
        raise GuidanceSchemaFault("guidance response must be a JSON object")
    missing = [k for k in BUNDLE_FIELDS if k not in raw]
    if missing:
        raise GuidanceSchemaFault(f"guidance response lacks {', '.join(missing)}")
    names = raw["target_part_names"]
    if not isinstance(names, list) or not all(isinstance(n, str) for n in names):
        raise GuidanceSchemaFault("target_part_names must be a list of strings")
    for k in BUNDLE_FIELDS:
        if k != "target_part_names" and not isinstance(raw[k], str):
            raise GuidanceSchemaFault(f"{k} must be a string")
    try:
        edit_type = EditType.parse(raw["edit_type"])
    except ValueError:
        raise GuidanceSchemaFault(f"unknown edit_type {raw['edit_type']!r}") from None
    required = [k for k in BUNDLE_FIELDS if k not in ("target_part_names", "edit_type")]
    if edit_type is EditType.DELETION:
        required.remove("new_part_description")
    empty = [k for k in required if not raw[k].strip()]
    if not names or not all(n.strip() for n in names):
        empty.append("target_part_names")
    if empty:
        raise GuidanceSchemaFault(f"empty guidance fields: {', '.join(empty)}")
    return GuidanceBundle(
        raw["original_description"], tuple(names), edit_type, raw["new_complete_description"],
        raw["new_part_description"], raw["stage1_text"], raw["stage2_text"],
    )


def text_guidance_key(views: ViewSet, prompt: str) -> dict:
    return {"kind": "guidance", "prompt": prompt, "view_ids": sorted(views.ids())}


def request_text_guidance(views: ViewSet, prompt: str, provider: Provider) -> GuidanceBundle:
    if not prompt.strip():
        raise ValueError("editing prompt must be non-empty")
    key = text_guidance_key(views, prompt)
    live = {"prompt": prompt, "views": views.to_live(), "extras": {"template": load_template("guidance")}}
    return parse_bundle(provider.request("guidance", key, live))


# Toy text encoder. Shape words land on their class slot so that the toy
# fields (trained on one-hot class codes) respond to them; other text gets a
# hash-derived vector.
VOCAB = {
    0: ("sphere", "ball", "orb", "round"),
    1: ("box", "cube", "crate", "block"),
    2: ("dumbbell", "barbell", "weight"),
}


def hash_embedding(data: bytes, dim: int = EMBED_DIM) -> np.ndarray:
    digest = hashlib.sha256(data).digest()
    return np.frombuffer(digest[:dim], dtype=np.uint8).astype(np.float64) / 127.5 - 1.0


def embed_text(text: str, dim: int = EMBED_DIM) -> Condition:
    words = set(re.findall(r"[a-z]+", text.lower()))
    e = np.zeros(dim)
    for slot, keys in VOCAB.items():
        if words.intersection(keys):
            e[slot] = 1.0
    if not e.any():
        e = hash_embedding(text.encode(), dim)
    return Condition(CondKind.TEXT, e)
