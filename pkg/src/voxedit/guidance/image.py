"""Image-edit requests. Payloads are never decoded; their hash stands in for an image encoder."""

from __future__ import annotations

import base64
from dataclasses import dataclass

from ..flow.core import EMBED_DIM, CondKind, Condition
from .providers import Provider, bytes_sha256, load_template
from .text import hash_embedding


@dataclass(frozen=True)
class ImageGuidance:
    payload: bytes
    condition: Condition


def embed_image(payload: bytes, dim: int = EMBED_DIM) -> Condition:
    return Condition(CondKind.IMAGE, hash_embedding(payload, dim))


def image_edit_key(payload: bytes, prompt: str, part_desc: str) -> dict:
    return {"kind": "image", "prompt": prompt, "part_description": part_desc, "source": bytes_sha256(payload)}


def request_image_edit(payload: bytes, prompt: str, part_desc: str, provider: Provider) -> ImageGuidance:
    if not payload:
        raise ValueError("image edit needs a non-empty source payload")
    key = image_edit_key(payload, prompt, part_desc)
    live = {
        "prompt": prompt,
        "views": [{"id": 0, "azimuth": 0.0, "elevation": 0.0, "image_b64": base64.b64encode(payload).decode()}],
        "extras": {"part_description": part_desc, "template": load_template("image")},
    }
    edited = provider.request_bytes("image", key, live)
    return ImageGuidance(edited, embed_image(edited))
