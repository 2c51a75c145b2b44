"""Readers and writers for voxel grids, masks and PLY point exports.

VXG1 text::

    VXG1 <R> <D> <count>
    x y z f_0 ... f_{D-1}        (count lines, lexicographic order)

Floats are written with ``repr`` so text round-trips are bit-exact. The
binary variant starts with the magic ``VXG1BIN\\n`` followed by little-endian
int32 ``R D count`` and packed records of three int32 coordinates plus D
float32 features; it is exact only for float32-representable features.

VXM1 text::

    VXM1 <R> <count>
    x y z                        (count lines)
"""

from __future__ import annotations

import io
import os
from pathlib import Path
from typing import Iterable

import numpy as np

from ..errors import EmptySet, ShapeFault
from .grid import GridDims, LatentGrid, VoxelMask

BINARY_MAGIC = b"VXG1BIN\n"


def _fmt(x: float) -> str:
    return repr(float(x))


def format_grid(grid: LatentGrid) -> str:
    lines = [f"VXG1 {grid.dims.resolution} {grid.dims.channels} {len(grid)}"]
    for c, f in zip(grid.coords.tolist(), grid.features.tolist()):
        lines.append(" ".join([str(c[0]), str(c[1]), str(c[2])] + [_fmt(v) for v in f]))
    return "\n".join(lines) + "\n"


def parse_grid(lines: Iterable[str]) -> LatentGrid:
    it = iter(lines)
    header = next(it).split()
    if len(header) != 4 or header[0] != "VXG1":
        raise ValueError(f"not a VXG1 header: {' '.join(header)!r}")
    r, d, count = (int(v) for v in header[1:])
    dims = GridDims(r, d)
    coords = np.zeros((count, 3), dtype=np.int64)
    feats = np.zeros((count, d), dtype=np.float64)
    for i in range(count):
        tok = next(it).split()
        if len(tok) != 3 + d:
            raise ShapeFault(f"record {i} has {len(tok)} fields, expected {3 + d}")
        coords[i] = [int(v) for v in tok[:3]]
        feats[i] = [float(v) for v in tok[3:]]
    return LatentGrid(dims, coords, feats)


def save_grid(grid: LatentGrid, path, binary: bool = False) -> Path:
    path = Path(path)
    if binary:
        path.write_bytes(grid_to_bytes(grid))
    else:
        path.write_text(format_grid(grid))
    return path


def grid_to_bytes(grid: LatentGrid) -> bytes:
    d = grid.dims.channels
    rec = np.dtype([("c", "<i4", (3,)), ("f", "<f4", (d,))])
    out = np.zeros(len(grid), dtype=rec)
    out["c"] = grid.coords
    out["f"] = grid.features
    header = np.array([grid.dims.resolution, d, len(grid)], dtype="<i4").tobytes()
    return BINARY_MAGIC + header + out.tobytes()


def grid_from_bytes(data: bytes) -> LatentGrid:
    if not data.startswith(BINARY_MAGIC):
        raise ValueError("missing VXG1 binary magic")
    off = len(BINARY_MAGIC)
    r, d, count = np.frombuffer(data, dtype="<i4", count=3, offset=off)
    rec = np.dtype([("c", "<i4", (3,)), ("f", "<f4", (int(d),))])
    body = np.frombuffer(data, dtype=rec, count=int(count), offset=off + 12)
    return LatentGrid(GridDims(int(r), int(d)), body["c"].astype(np.int64), body["f"].astype(np.float64))


def load_grid(path) -> LatentGrid:
    raw = Path(path).read_bytes()
    if raw.startswith(BINARY_MAGIC):
        return grid_from_bytes(raw)
    return parse_grid(io.StringIO(raw.decode("ascii")))


def save_mask(mask: VoxelMask, path) -> Path:
    coords = mask.coords()
    lines = [f"VXM1 {mask.dims.resolution} {len(coords)}"]
    lines += [f"{x} {y} {z}" for x, y, z in coords.tolist()]
    path = Path(path)
    path.write_text("\n".join(lines) + "\n")
    return path


def load_mask(path) -> VoxelMask:
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 3 or header[0] != "VXM1":
            raise ValueError(f"not a VXM1 header: {' '.join(header)!r}")
        r, count = int(header[1]), int(header[2])
        coords = [tuple(int(v) for v in fh.readline().split()) for _ in range(count)]
    return VoxelMask.from_coords(GridDims(r), coords)


def export_ply(grid: LatentGrid, path) -> Path:
    """ASCII PLY with one vertex per occupied voxel.

    Vertex colors come from the first three feature channels clamped to
    [0, 1]; missing channels are black.
    """
    if len(grid) == 0:
        raise EmptySet("cannot export an empty grid")
    rgb = np.zeros((len(grid), 3))
    k = min(3, grid.dims.channels)
    rgb[:, :k] = np.clip(grid.features[:, :k], 0.0, 1.0)
    rgb = np.round(rgb * 255).astype(int)
    lines = [
        "ply",
        "format ascii 1.0",
        f"comment voxel resolution {grid.dims.resolution}",
        f"element vertex {len(grid)}",
        "property int x",
        "property int y",
        "property int z",
        "property uchar red",
        "property uchar green",
        "property uchar blue",
        "end_header",
    ]
    for c, col in zip(grid.coords.tolist(), rgb.tolist()):
        lines.append(f"{c[0]} {c[1]} {c[2]} {col[0]} {col[1]} {col[2]}")
    path = Path(path)
    path.write_text("\n".join(lines) + "\n")
    return path


def read_ply_coords(path) -> np.ndarray:
    with open(path) as fh:
        count = None
        for line in fh:
            line = line.strip()
            if line.startswith("element vertex"):
                count = int(line.split()[-1])
            if line == "end_header":
                break
        if count is None:
            raise ValueError("PLY without a vertex element")
        rows = [fh.readline().split()[:3] for _ in range(count)]
    return np.array(rows, dtype=np.int64).reshape(-1, 3)


def file_sha256(path) -> str:
    import hashlib

    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def atomic_write_text(path, text: str):
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)
