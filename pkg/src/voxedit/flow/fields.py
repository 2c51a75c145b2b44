"""Velocity fields: an analytic linear field and a small per-voxel MLP."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..voxel.grid import as_coord_array
from .core import EMBED_DIM, Condition


class LinearField:
    """``v(x, t) = rate * x``, whose exact flow is ``x(t) = x(0) * exp(rate * t)``."""

    coords = None

    def __init__(self, rate: float):
        if not np.isfinite(rate):
            raise ValueError("rate must be finite")
        self.rate = float(rate)

    def velocity(self, x, t, cond):
        return self.rate * np.asarray(x, dtype=np.float64)

    def with_domain(self, coords):
        return self

    def exact(self, x0, t):
        return np.asarray(x0, dtype=np.float64) * np.exp(self.rate * t)


def make_linear_field(rate: float) -> LinearField:
    return LinearField(rate)


class CountingField:
    """Delegates to ``field`` and tallies evaluations per condition kind."""

    def __init__(self, field):
        self.field = field
        self.coords = getattr(field, "coords", None)
        self.calls: dict = {}

    def velocity(self, x, t, cond):
        self.calls[cond.kind] = self.calls.get(cond.kind, 0) + 1
        return self.field.velocity(x, t, cond)

    def with_domain(self, coords):
        return CountingField(self.field.with_domain(coords))


PARAM_NAMES = ("w1", "b1", "w2", "b2", "w3", "b3")


class MlpField:
    """Per-voxel MLP velocity field.

    Each row of the state is processed independently from
    ``[x_row, t, cond_embedding, normalized_voxel_position]`` through two
    tanh hidden layers. The voxel domain is swappable via
    :meth:`with_domain` so the same weights serve any structure.
    """

    def __init__(self, params: dict, channels: int, resolution: int, hidden: int,
                 embed_dim: int = EMBED_DIM, seed: int = 0, coords=None):
        self.params = {k: np.asarray(params[k], dtype=np.float64) for k in PARAM_NAMES}
        for a in self.params.values():
            a.setflags(write=False)
        self.channels = int(channels)
        self.resolution = int(resolution)
        self.hidden = int(hidden)
        self.embed_dim = int(embed_dim)
        self.seed = int(seed)
        self.coords = None if coords is None else as_coord_array(coords)
        self._pos = None if coords is None else self.normalize(self.coords)

    def normalize(self, coords: np.ndarray) -> np.ndarray:
        return (coords.astype(np.float64) + 0.5) / self.resolution * 2.0 - 1.0

    def with_domain(self, coords) -> MlpField:
        return MlpField(self.params, self.channels, self.resolution, self.hidden,
                        self.embed_dim, self.seed, coords)

    def forward(self, x: np.ndarray, t, cond_rows: np.ndarray, pos: np.ndarray) -> np.ndarray:
        p = self.params
        n = len(x)
        tcol = np.broadcast_to(np.asarray(t, dtype=np.float64).reshape(-1, 1), (n, 1))
        h = np.concatenate([x, tcol, cond_rows, pos], axis=1)
        h = np.tanh(h @ p["w1"] + p["b1"])
        h = np.tanh(h @ p["w2"] + p["b2"])
        return h @ p["w3"] + p["b3"]

    def velocity(self, x, t, cond: Condition):
        x = np.asarray(x, dtype=np.float64)
        if self._pos is None:
            raise ValueError("MlpField needs a voxel domain; call with_domain first")
        if x.shape != (len(self._pos), self.channels):
            raise ValueError(f"state shape {x.shape} != ({len(self._pos)}, {self.channels})")
        cond_rows = np.broadcast_to(cond.embedding, (len(x), self.embed_dim))
        return self.forward(x, t, cond_rows, self._pos)

    def same_weights(self, other: MlpField) -> bool:
        return all(self.params[k].tobytes() == other.params[k].tobytes() for k in PARAM_NAMES)

    # VFM1 checkpoints

    def to_text(self) -> str:
        lines = [
            f"VFM1 channels={self.channels} embed={self.embed_dim} hidden={self.hidden} "
            f"resolution={self.resolution} seed={self.seed}"
        ]
        for name in PARAM_NAMES:
            a = self.params[name]
            a2 = a.reshape(a.shape[0], -1) if a.ndim == 2 else a.reshape(1, -1)
            lines.append(f"param {name} {' '.join(str(s) for s in a.shape)}")
            lines.extend(" ".join(repr(v) for v in row) for row in a2.tolist())
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> MlpField:
        lines = text.splitlines()
        head = lines[0].split()
        if head[0] != "VFM1":
            raise ValueError("not a VFM1 checkpoint")
        meta = dict(kv.split("=") for kv in head[1:])
        params, i = {}, 1
        while i < len(lines):
            tok = lines[i].split()
            if not tok:
                i += 1
                continue
            if tok[0] != "param":
                raise ValueError(f"unexpected line {i + 1} in checkpoint")
            name, shape = tok[1], tuple(int(s) for s in tok[2:])
            nrows = shape[0] if len(shape) == 2 else 1
            rows = [[float(v) for v in lines[i + 1 + r].split()] for r in range(nrows)]
            params[name] = np.array(rows, dtype=np.float64).reshape(shape)
            i += 1 + nrows
        return cls(params, int(meta["channels"]), int(meta["resolution"]), int(meta["hidden"]),
                   int(meta["embed"]), int(meta["seed"]))

    def save(self, path) -> Path:
        path = Path(path)
        path.write_text(self.to_text())
        return path

    @classmethod
    def load(cls, path) -> MlpField:
        return cls.from_text(Path(path).read_text())
