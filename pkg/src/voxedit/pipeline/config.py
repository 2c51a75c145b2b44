"""Run configuration and its flat ``key = value`` file format.

Lines starting with ``#`` are comments. Relative paths resolve against the
config file's directory. Documented keys:

=================  ==========================================================
asset              VXG1 grid to edit (required)
models             directory with the four ``.vfm`` checkpoints (required)
fixtures           fixture directory (required in fixture mode)
output             output directory (required)
prompt             editing instruction (required)
seed               integer seed (required)
k, tau             edit-region neighbor count and threshold (8, 0.5)
bandwidth          soft-mask ramp width in voxels, 0 = hard mask (3.0)
rho                stage-1 mask downscale threshold (0.5)
factor             stage-2 to stage-1 resolution ratio (4)
steps_s1/steps_s2  uniform schedule lengths (50, 50)
cfg_s1/cfg_s2      guidance scale while editing; inversion always uses 0 (1.0)
interleave         text_first | image_first
stepper            rf_solver | euler
labels             optional part-label JSON; skips segmentation
edit_parts         comma-separated part ids; skips provider part selection
granularity        part count to use with edit_parts when segmenting
segmentation       provider | fallback (seeded k-means)
view_selection     provider | heuristic
provider_mode      fixture | live
endpoint, timeout  live provider settings (env vars fill gaps)
dump_trajectories  write inversion trajectories (true)
=================  ==========================================================
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

from ..guidance.providers import ProviderConfig
from ..inpaint import InterleavePolicy, SoftMaskParams
from ..region import RegionParams

PATH_KEYS = ("asset", "models", "fixtures", "output", "labels")


def parse_kv(text: str) -> dict[str, str]:
    out = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"config line {n}: expected 'key = value'")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def format_kv(values: dict) -> str:
    return "".join(f"{k} = {v}\n" for k, v in values.items())


def _bool(v) -> bool:
    if isinstance(v, bool):
        return v
    return str(v).strip().lower() in ("1", "true", "yes", "on")


def _int_list(v) -> tuple[int, ...] | None:
    if v is None or v == "":
        return None
    if isinstance(v, str):
        return tuple(int(s) for s in v.split(",") if s.strip())
    return tuple(int(s) for s in v)


@dataclass(frozen=True)
class RunConfig:
    asset: Path
    models: Path
    output: Path
    prompt: str
    seed: int
    fixtures: Path | None = None
    k: int = 8
    tau: float = 0.5
    bandwidth: float = 3.0
    rho: float = 0.5
    factor: int = 4
    steps_s1: int = 50
    steps_s2: int = 50
    cfg_s1: float = 1.0
    cfg_s2: float = 1.0
    interleave: str = "text_first"
    stepper: str = "rf_solver"
    labels: Path | None = None
    edit_parts: tuple[int, ...] | None = None
    granularity: int | None = None
    segmentation: str = "fallback"
    view_selection: str = "heuristic"
    provider_mode: str = "fixture"
    endpoint: str | None = None
    timeout: float | None = None
    dump_trajectories: bool = True
    base_dir: Path = field(default=Path("."), compare=False)

    def __post_init__(self):
        conv = {"seed": int, "k": int, "factor": int, "steps_s1": int, "steps_s2": int,
                "tau": float, "bandwidth": float, "rho": float, "cfg_s1": float, "cfg_s2": float}
        for key, fn in conv.items():
            object.__setattr__(self, key, fn(getattr(self, key)))
        for key in PATH_KEYS:
            v = getattr(self, key)
            if v is not None and v != "":
                object.__setattr__(self, key, Path(v))
            elif v == "":
                object.__setattr__(self, key, None)
        object.__setattr__(self, "edit_parts", _int_list(self.edit_parts))
        if self.granularity not in (None, ""):
            object.__setattr__(self, "granularity", int(self.granularity))
        else:
            object.__setattr__(self, "granularity", None)
        if self.timeout not in (None, ""):
            object.__setattr__(self, "timeout", float(self.timeout))
        object.__setattr__(self, "dump_trajectories", _bool(self.dump_trajectories))
        InterleavePolicy(self.interleave)
        if self.stepper not in ("rf_solver", "euler"):
            raise ValueError(f"unknown stepper {self.stepper!r}")
        if self.segmentation not in ("provider", "fallback"):
            raise ValueError("segmentation must be 'provider' or 'fallback'")
        if self.view_selection not in ("provider", "heuristic"):
            raise ValueError("view_selection must be 'provider' or 'heuristic'")
        if not self.prompt.strip():
            raise ValueError("prompt must be non-empty")

    @classmethod
    def from_file(cls, path, **overrides) -> RunConfig:
        path = Path(path)
        values = parse_kv(path.read_text())
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls.from_dict(values, path.parent)

    @classmethod
    def from_dict(cls, values: dict, base_dir=".") -> RunConfig:
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(values) - names
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
        if "seed" not in values or values["seed"] in (None, ""):
            raise ValueError("config must set a seed")
        base = Path(base_dir)
        vals = dict(values)
        for key in PATH_KEYS:
            if vals.get(key):
                p = Path(vals[key])
                vals[key] = p if p.is_absolute() else base / p
        return cls(**vals, base_dir=base)

    def validate(self, require_fixtures: bool = True):
        needed = [("asset", self.asset), ("models", self.models)]
        if self.provider_mode == "fixture" and require_fixtures:
            needed.append(("fixtures", self.fixtures))
        if self.labels is not None:
            needed.append(("labels", self.labels))
        for name, p in needed:
            if p is None or not Path(p).exists():
                raise FileNotFoundError(f"config {name} path {p} does not exist")

    @property
    def region_params(self) -> RegionParams:
        return RegionParams(self.k, self.tau)

    @property
    def soft_params(self) -> SoftMaskParams:
        return SoftMaskParams(self.bandwidth)

    def provider_config(self) -> ProviderConfig:
        return ProviderConfig.from_env(
            mode=self.provider_mode, endpoint=self.endpoint,
            fixture_dir=self.fixtures, timeout=self.timeout,
        )

    def snapshot(self) -> dict:
        """Config values with paths relative to the config directory (stable across machines)."""
        out = {}
        for f in dataclasses.fields(self):
            if f.name == "base_dir":
                continue
            v = getattr(self, f.name)
            if isinstance(v, Path):
                try:
                    v = str(v.relative_to(self.base_dir))
                except ValueError:
                    v = v.name
            elif isinstance(v, tuple):
                v = list(v)
            out[f.name] = v
        return out
