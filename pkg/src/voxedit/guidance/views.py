"""Rendered-view descriptors, a z-buffer depth renderer and view selection."""

from __future__ import annotations

import base64
import math
from dataclasses import dataclass

import numpy as np

from ..errors import GuidanceSchemaFault
from ..voxel.grid import as_coord_array
from .providers import Provider, bytes_sha256

GUIDANCE_VIEWS = 8
SELECTION_VIEWS = 24


@dataclass(frozen=True)
class View:
    id: int
    azimuth: float
    elevation: float
    payload: bytes = b""


@dataclass(frozen=True)
class ViewSet:
    views: tuple[View, ...]

    def __post_init__(self):
        ids = [v.id for v in self.views]
        if len(set(ids)) != len(ids):
            raise ValueError("view ids must be unique")

    def ids(self) -> list[int]:
        return [v.id for v in self.views]

    def get(self, view_id: int) -> View:
        for v in self.views:
            if v.id == view_id:
                return v
        raise KeyError(view_id)

    def __len__(self):
        return len(self.views)

    def to_live(self) -> list[dict]:
        return [
            {"id": v.id, "azimuth": v.azimuth, "elevation": v.elevation,
             "image_b64": base64.b64encode(v.payload).decode()}
            for v in self.views
        ]


def canonical_views(count: int = GUIDANCE_VIEWS, elevation: float = 0.0) -> ViewSet:
    """``count`` views evenly spaced in azimuth, starting at azimuth 0 (the +x side)."""
    return ViewSet(tuple(View(i, 360.0 * i / count, elevation) for i in range(count)))


def view_direction(azimuth: float, elevation: float) -> np.ndarray:
    """Unit vector from the object toward the camera."""
    a, e = math.radians(azimuth), math.radians(elevation)
    return np.array([math.cos(e) * math.cos(a), math.cos(e) * math.sin(a), math.sin(e)])


def _camera_basis(d: np.ndarray):
    up = np.array([0.0, 0.0, 1.0])
    if abs(d @ up) > 0.999:
        up = np.array([0.0, 1.0, 0.0])
    right = np.cross(up, d)
    right /= np.linalg.norm(right)
    return right, np.cross(d, right)


def zbuffer(coords, resolution: int, azimuth: float, elevation: float):
    """Orthographic z-buffer with one-voxel pixels.

    Returns ``(pixel_keys, winner_rows, depth, image_size)``; the first three
    have one entry per covered pixel and ``winner_rows`` indexes ``coords``.
    Depth ties go to the lower row.
    """
    c = as_coord_array(coords).astype(np.float64) + 0.5 - resolution / 2.0
    d = view_direction(azimuth, elevation)
    right, up = _camera_basis(d)
    half = int(math.ceil(resolution * math.sqrt(3) / 2)) + 1
    px = np.floor(c @ right).astype(np.int64) + half
    py = np.floor(c @ up).astype(np.int64) + half
    depth = c @ d
    key = py * (2 * half + 1) + px
    rows = np.arange(len(c))
    order = np.lexsort((rows, -depth, key))
    key_sorted = key[order]
    first = np.ones(len(order), dtype=bool)
    first[1:] = key_sorted[1:] != key_sorted[:-1]
    win = order[first]
    return key[win], win, depth[win], 2 * half + 1


def render_depth_pgm(coords, resolution: int, view: View) -> bytes:
    """Binary PGM depth image of the voxels seen from ``view`` (brighter is closer)."""
    keys, _, depth, size = zbuffer(coords, resolution, view.azimuth, view.elevation)
    img = np.zeros(size * size, dtype=np.uint8)
    if len(keys):
        span = resolution * math.sqrt(3)
        img[keys] = np.clip(128 + depth / span * 254, 1, 255).astype(np.uint8)
    img = img.reshape(size, size)[::-1]
    return f"P5\n{size} {size}\n255\n".encode() + img.tobytes()


def render_views(coords, resolution: int, views: ViewSet) -> ViewSet:
    return ViewSet(tuple(View(v.id, v.azimuth, v.elevation, render_depth_pgm(coords, resolution, v))
                         for v in views.views))


def visibility_score(coords, resolution: int, edit_mask: np.ndarray, view: View) -> tuple[int, int]:
    """(pixels showing an edit voxel, pixels showing any voxel)."""
    _, win, _, _ = zbuffer(coords, resolution, view.azimuth, view.elevation)
    return int(edit_mask[win].sum()), len(win)


def heuristic_best_view(views: ViewSet, coords, resolution: int, p_edit) -> int:
    """View that shows the most edit-part pixels, then the most asset pixels."""
    coords = as_coord_array(coords)
    edit_vol = np.zeros((resolution,) * 3, dtype=bool)
    pe = as_coord_array(p_edit)
    edit_vol[tuple(pe.T)] = True
    edit_mask = edit_vol[tuple(coords.T)]
    best, best_score = None, None
    for v in views.views:
        s = visibility_score(coords, resolution, edit_mask, v)
        if best_score is None or s > best_score:
            best, best_score = v.id, s
    return best


def view_selection_key(views: ViewSet, target_part_names, prompt: str) -> dict:
    return {
        "kind": "view",
        "prompt": prompt,
        "target_part_names": list(target_part_names),
        "view_ids": sorted(views.ids()),
        "payloads": [bytes_sha256(views.get(i).payload) for i in sorted(views.ids())],
    }


def select_best_view(views: ViewSet, bundle=None, provider: Provider | None = None, prompt: str = "",
                     coords=None, resolution: int | None = None, p_edit=None) -> int:
    """Id of the view to hand to the image editor.

    With a provider the choice is replayed or requested; without one the
    z-buffer heuristic over ``coords``/``p_edit`` decides.
    """
    if len(views) == 0:
        raise ValueError("no views to choose from")
    if len(views) == 1:
        return views.views[0].id
    if provider is not None:
        names = bundle.target_part_names if bundle is not None else ()
        resp = provider.request("view", view_selection_key(views, names, prompt),
                                {"prompt": prompt, "views": views.to_live()})
        vid = resp.get("view_id") if isinstance(resp, dict) else None
        if vid not in views.ids():
            raise GuidanceSchemaFault(f"provider chose view {vid!r}, not one of {views.ids()}")
        return vid
    if coords is None or resolution is None:
        raise ValueError("heuristic view selection needs the asset coordinates")
    return heuristic_best_view(views, coords, resolution, p_edit if p_edit is not None else [])
