"""Mask-guided editing against an inversion trajectory.

The edited latent is produced by sampling from the inverted noise while, at
every step, voxels outside the edit region are pulled back to the recorded
inversion state. Sampling alternates between a text-conditioned and an
image-conditioned field. Structure (stage 1) is edited on a coarse dense
grid first, then per-voxel features (stage 2) on the new structure.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np
from scipy import ndimage

from .errors import EmptyAsset, ShapeFault
from .flow.core import CfgParams, Condition, GuidedField, TimeSchedule, Trajectory, get_stepper, invert
from .flow.fields import MlpField
from .region import EditType
from .voxel.geometry import chamfer_distance, downscale_mask
from .voxel.grid import GridDims, LatentGrid, SoftMask, VoxelMask
from .voxel.io import load_mask


class InterleavePolicy(enum.Enum):
    TEXT_FIRST = "text_first"
    IMAGE_FIRST = "image_first"


class FieldRole(enum.Enum):
    TEXT = "text"
    IMAGE = "image"


@dataclass(frozen=True)
class SoftMaskParams:
    """Linear ramp of width ``bandwidth`` voxels; 0 gives a hard mask."""

    bandwidth: float = 3.0

    def __post_init__(self):
        if not np.isfinite(self.bandwidth) or self.bandwidth < 0:
            raise ValueError("bandwidth must be finite and >= 0")


def distance_to_region(r_edit: VoxelMask) -> np.ndarray:
    """Euclidean distance from every cell to the nearest edit cell (inf if none)."""
    if not r_edit.dense.any():
        return np.full(r_edit.dims.shape, np.inf)
    return ndimage.distance_transform_edt(~r_edit.dense)


def soft_weights(r_edit: VoxelMask, params: SoftMaskParams = SoftMaskParams()) -> SoftMask:
    dense = r_edit.dense.astype(np.float64)
    if params.bandwidth > 0 and r_edit.dense.any():
        d = distance_to_region(r_edit)
        ramp = np.maximum(0.0, 1.0 - d / params.bandwidth)
        dense = np.where(r_edit.dense, 1.0, ramp)
    return SoftMask(r_edit.dims, dense)


def interleave_select(step_index: int, policy: InterleavePolicy = InterleavePolicy.TEXT_FIRST) -> FieldRole:
    if step_index < 0:
        raise ValueError("step index must be >= 0")
    even = step_index % 2 == 0
    if policy is InterleavePolicy.TEXT_FIRST:
        return FieldRole.TEXT if even else FieldRole.IMAGE
    return FieldRole.IMAGE if even else FieldRole.TEXT


def blend(x_denoised: np.ndarray, x_ref: np.ndarray, w: np.ndarray) -> np.ndarray:
    """``w * x_denoised + (1 - w) * x_ref``, taking either side verbatim at w = 1 or 0."""
    mixed = w * x_denoised + (1.0 - w) * x_ref
    return np.where(w == 1, x_denoised, np.where(w == 0, x_ref, mixed))


def _pair(value):
    if isinstance(value, (tuple, list)):
        if len(value) != 2:
            raise ValueError("expected a (text, image) pair")
        return tuple(value)
    return (value, value)


def _broadcast_weights(weights, shape) -> np.ndarray:
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != tuple(shape[: w.ndim]):
        raise ShapeFault(f"weights of shape {w.shape} do not match state {shape}")
    return w.reshape(w.shape + (1,) * (len(shape) - w.ndim))


def repaint_denoise(trajectory: Trajectory, weights, fields, conds,
                    policy: InterleavePolicy = InterleavePolicy.TEXT_FIRST,
                    cfg: CfgParams = CfgParams(), stepper="rf_solver",
                    callback: Callable | None = None) -> np.ndarray:
    """Sample from ``trajectory.states[0]`` with per-voxel pull-back to the trajectory.

    ``weights`` holds one blend weight per state row (1 = fully generated,
    0 = copied from the trajectory). ``fields`` and ``conds`` are either a
    single value or a ``(text, image)`` pair. ``callback(i, x_denoised,
    x_ref, x_blended)`` is invoked after each step.
    """
    text_field, image_field = _pair(fields)
    text_cond, image_cond = _pair(conds)
    x = trajectory.states[0]
    for f in (text_field, image_field):
        dom = getattr(f, "coords", None)
        if dom is not None and len(dom) != len(x):
            raise ShapeFault(f"field domain has {len(dom)} voxels, state has {len(x)}")
    w = _broadcast_weights(weights, x.shape)
    step = get_stepper(stepper)
    guided = {
        FieldRole.TEXT: (GuidedField(text_field, cfg), text_cond),
        FieldRole.IMAGE: (GuidedField(image_field, cfg), image_cond),
    }
    t = trajectory.schedule.times
    for i in range(trajectory.schedule.steps):
        f, c = guided[interleave_select(i, policy)]
        x_den = step(x, t[i], t[i + 1], f, c)
        ref = trajectory.states[i + 1]
        x = blend(x_den, ref, w)
        if callback is not None:
            callback(i, x_den, ref, x)
    return x


# toy stage-1 codec: each coarse cell stores the f^3 occupancy bits of its block


def encode_structure(occupancy: VoxelMask, factor: int) -> tuple[GridDims, np.ndarray, np.ndarray]:
    """Dense coarse latent of an occupancy volume.

    Returns the coarse dims, every coarse coordinate (lexicographic) and an
    ``(R1^3, factor^3)`` array of 0/1 values.
    """
    r = occupancy.dims.resolution
    if r % factor:
        raise ShapeFault(f"factor {factor} does not divide {r}")
    c = r // factor
    blocks = occupancy.dense.reshape(c, factor, c, factor, c, factor).transpose(0, 2, 4, 1, 3, 5)
    dims1 = GridDims(c, factor**3)
    return dims1, dims1.all_coords(), blocks.reshape(c**3, factor**3).astype(np.float64)


def decode_structure(latent: np.ndarray, resolution: int, factor: int) -> VoxelMask:
    c = resolution // factor
    bits = (np.asarray(latent) > 0.5).reshape(c, c, c, factor, factor, factor)
    dense = bits.transpose(0, 3, 1, 4, 2, 5).reshape(resolution, resolution, resolution)
    return VoxelMask(GridDims(resolution), dense)


@dataclass(frozen=True)
class FieldPair:
    text: MlpField
    image: MlpField


@dataclass(frozen=True)
class ToyModels:
    stage1: FieldPair
    stage2: FieldPair

    FILES = {
        ("stage1", "text"): "stage1_text.vfm",
        ("stage1", "image"): "stage1_image.vfm",
        ("stage2", "text"): "stage2_text.vfm",
        ("stage2", "image"): "stage2_image.vfm",
    }

    def save(self, directory) -> list[Path]:
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        out = []
        for (stage, role), name in self.FILES.items():
            out.append(getattr(getattr(self, stage), role).save(d / name))
        return out

    @classmethod
    def load(cls, directory) -> ToyModels:
        d = Path(directory)
        f = {key: MlpField.load(d / name) for key, name in cls.FILES.items()}
        return cls(
            FieldPair(f["stage1", "text"], f["stage1", "image"]),
            FieldPair(f["stage2", "text"], f["stage2", "image"]),
        )


@dataclass(frozen=True)
class EditPlan:
    """Everything one edit needs besides the asset and the models."""

    edit_type: EditType
    r_edit: VoxelMask
    cond_original: Condition
    cond_text_s1: Condition
    cond_text_s2: Condition
    cond_image: Condition
    rho: float = 0.5
    factor: int = 4
    r_edit_stage1: VoxelMask | None = None
    steps_s1: int = 50
    steps_s2: int = 50
    cfg_s1: CfgParams = CfgParams(1.0)
    cfg_s2: CfgParams = CfgParams(1.0)
    soft: SoftMaskParams = SoftMaskParams()
    policy: InterleavePolicy = InterleavePolicy.TEXT_FIRST
    stepper: str = "rf_solver"
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "edit_type", EditType.parse(self.edit_type))
        derived = downscale_mask(self.r_edit, self.factor, self.rho)
        if self.r_edit_stage1 is not None and self.r_edit_stage1 != derived:
            raise ValueError("stage-1 mask is not the downscaled stage-2 mask")
        object.__setattr__(self, "r_edit_stage1", derived)

    @property
    def schedule_s1(self) -> TimeSchedule:
        return TimeSchedule.uniform(self.steps_s1)

    @property
    def schedule_s2(self) -> TimeSchedule:
        return TimeSchedule.uniform(self.steps_s2)

    def to_json(self, mask_path: str, mask_s1_path: str | None = None) -> dict:
        d = {
            "edit_type": self.edit_type.value,
            "mask": str(mask_path),
            "rho": self.rho,
            "factor": self.factor,
            "cond_original": self.cond_original.to_json(),
            "cond_text_s1": self.cond_text_s1.to_json(),
            "cond_text_s2": self.cond_text_s2.to_json(),
            "cond_image": self.cond_image.to_json(),
            "steps_s1": self.steps_s1,
            "steps_s2": self.steps_s2,
            "cfg_s1": self.cfg_s1.scale,
            "cfg_s2": self.cfg_s2.scale,
            "bandwidth": self.soft.bandwidth,
            "interleave": self.policy.value,
            "stepper": self.stepper,
            "seed": self.seed,
        }
        if mask_s1_path is not None:
            d["mask_stage1"] = str(mask_s1_path)
        return d

    @classmethod
    def from_json(cls, d: dict, base_dir=".") -> EditPlan:
        base = Path(base_dir)
        mask = load_mask(base / d["mask"])
        mask1 = load_mask(base / d["mask_stage1"]) if d.get("mask_stage1") else None
        return cls(
            edit_type=EditType.parse(d["edit_type"]),
            r_edit=mask,
            r_edit_stage1=mask1,
            rho=float(d.get("rho", 0.5)),
            factor=int(d.get("factor", 4)),
            cond_original=Condition.from_json(d["cond_original"]),
            cond_text_s1=Condition.from_json(d["cond_text_s1"]),
            cond_text_s2=Condition.from_json(d["cond_text_s2"]),
            cond_image=Condition.from_json(d["cond_image"]),
            steps_s1=int(d.get("steps_s1", 50)),
            steps_s2=int(d.get("steps_s2", 50)),
            cfg_s1=CfgParams(float(d.get("cfg_s1", 1.0))),
            cfg_s2=CfgParams(float(d.get("cfg_s2", 1.0))),
            soft=SoftMaskParams(float(d.get("bandwidth", 3.0))),
            policy=InterleavePolicy(d.get("interleave", "text_first")),
            stepper=d.get("stepper", "rf_solver"),
            seed=int(d["seed"]),
        )

    @classmethod
    def load(cls, path) -> EditPlan:
        path = Path(path)
        return cls.from_json(json.loads(path.read_text()), path.parent)


@dataclass(frozen=True, eq=False)
class EditResult:
    grid: LatentGrid
    trajectory_s2: Trajectory
    trajectory_s1: Trajectory | None = None
    occupancy: VoxelMask | None = None
    weights_s2: np.ndarray | None = None


def invert_stage2(asset: LatentGrid, plan: EditPlan, models: ToyModels) -> Trajectory:
    field_ = models.stage2.text.with_domain(asset.coords)
    return invert(asset.features, field_, plan.cond_original, plan.schedule_s2, plan.stepper)


def invert_stage1(asset: LatentGrid, plan: EditPlan, models: ToyModels) -> Trajectory:
    _, coords1, latent1 = encode_structure(asset.occupancy(), plan.factor)
    field_ = models.stage1.text.with_domain(coords1)
    return invert(latent1, field_, plan.cond_original, plan.schedule_s1, plan.stepper)


def _check_trajectory(traj: Trajectory, schedule: TimeSchedule, rows: int, what: str):
    if traj.schedule != schedule:
        raise ShapeFault(f"{what} trajectory schedule differs from the editing schedule")
    if len(traj.states[0]) != rows:
        raise ShapeFault(f"{what} trajectory has {len(traj.states[0])} rows, expected {rows}")


def _stage2_repaint(asset: LatentGrid, new_coords: np.ndarray, traj2: Trajectory,
                    plan: EditPlan, models: ToyModels, weights_mask: SoftMask):
    """Feature editing on ``new_coords``; voxels without history start from fresh noise."""
    rows = asset.rows_of(new_coords)
    known = rows >= 0
    d = asset.dims.channels
    rng = np.random.default_rng(plan.seed)
    fresh = rng.standard_normal((int((~known).sum()), d))
    states = []
    for i, s in enumerate(traj2.states):
        a = np.zeros((len(new_coords), d))
        a[known] = s[rows[known]]
        if i == 0:
            a[~known] = fresh
        states.append(a)
    composite = Trajectory(traj2.schedule, tuple(states))
    w = np.where(known, weights_mask.at(new_coords), 1.0)
    fields = (models.stage2.text.with_domain(new_coords), models.stage2.image.with_domain(new_coords))
    x = repaint_denoise(composite, w, fields, (plan.cond_text_s2, plan.cond_image),
                        plan.policy, plan.cfg_s2, plan.stepper)
    return LatentGrid(asset.dims, new_coords, x), w


def edit_modification_or_addition(asset: LatentGrid, plan: EditPlan, models: ToyModels,
                                  trajectory_s2: Trajectory | None = None,
                                  trajectory_s1: Trajectory | None = None) -> EditResult:
    """Two-stage edit: structure on the coarse grid, then features.

    Precomputed trajectories can be passed in to resume from the inversion
    stage; they must use the plan's schedules.
    """
    if plan.r_edit.dims.resolution != asset.dims.resolution:
        raise ShapeFault("mask and asset resolutions differ")
    traj2 = trajectory_s2 if trajectory_s2 is not None else invert_stage2(asset, plan, models)
    _check_trajectory(traj2, plan.schedule_s2, len(asset), "stage-2")
    dims1, coords1, latent1 = encode_structure(asset.occupancy(), plan.factor)
    traj1 = trajectory_s1 if trajectory_s1 is not None else invert_stage1(asset, plan, models)
    _check_trajectory(traj1, plan.schedule_s1, len(coords1), "stage-1")

    w1 = plan.r_edit_stage1.contains(coords1).astype(np.float64)
    fields1 = (models.stage1.text.with_domain(coords1), models.stage1.image.with_domain(coords1))
    x1 = repaint_denoise(traj1, w1, fields1, (plan.cond_text_s1, plan.cond_image),
                         plan.policy, plan.cfg_s1, plan.stepper)
    decoded = decode_structure(x1, asset.dims.resolution, plan.factor)
    original = asset.occupancy()
    # cells outside the fine edit region keep their original occupancy
    occupancy = (decoded & plan.r_edit) | (original - plan.r_edit)
    if len(occupancy) == 0:
        raise EmptyAsset("edit removed every voxel")

    grid, w2 = _stage2_repaint(asset, occupancy.coords(), traj2, plan, models, soft_weights(plan.r_edit, plan.soft))
    return EditResult(grid, traj2, traj1, occupancy, w2)


def deletion_band(r_edit: VoxelMask, survivors: np.ndarray, bandwidth: float) -> np.ndarray:
    """Boolean flags for surviving voxels strictly closer than ``bandwidth`` to a removed voxel."""
    if bandwidth <= 0 or not r_edit.dense.any():
        return np.zeros(len(survivors), dtype=bool)
    d = distance_to_region(r_edit)[tuple(survivors.T)]
    return d < bandwidth


def edit_deletion(asset: LatentGrid, plan: EditPlan, models: ToyModels,
                  trajectory_s2: Trajectory | None = None) -> EditResult:
    """Remove the edit region and re-sample only the boundary band of features."""
    r_edit = plan.r_edit
    occ = asset.occupancy()
    if (r_edit - occ).dense.any():
        raise ValueError("deletion region must lie inside the asset")
    keep = ~r_edit.contains(asset.coords)
    if not keep.any():
        raise EmptyAsset("deletion removes every voxel")
    survivors = asset.subset(keep)
    traj2 = trajectory_s2 if trajectory_s2 is not None else invert_stage2(survivors, plan, models)
    _check_trajectory(traj2, plan.schedule_s2, len(survivors), "stage-2")
    w = soft_weights(r_edit, plan.soft).at(survivors.coords)
    fields = (models.stage2.text.with_domain(survivors.coords), models.stage2.image.with_domain(survivors.coords))
    x = repaint_denoise(traj2, w, fields, (plan.cond_text_s2, plan.cond_image),
                        plan.policy, plan.cfg_s2, plan.stepper)
    grid = LatentGrid(asset.dims, survivors.coords, x)
    return EditResult(grid, traj2, None, grid.occupancy(), w)


def edit_asset(asset: LatentGrid, plan: EditPlan, models: ToyModels, **trajectories) -> EditResult:
    if plan.edit_type is EditType.DELETION:
        trajectories.pop("trajectory_s1", None)
        return edit_deletion(asset, plan, models, **trajectories)
    return edit_modification_or_addition(asset, plan, models, **trajectories)


@dataclass(frozen=True)
class PreservationReport:
    chamfer_pres: float
    feature_mse_pres: float
    changed_voxel_count: int

    def to_json(self) -> dict:
        cd = self.chamfer_pres if np.isfinite(self.chamfer_pres) else None
        return {
            "chamfer_pres": cd,
            "chamfer_basis": "voxel centers",
            "feature_mse_pres": self.feature_mse_pres,
            "changed_voxel_count": self.changed_voxel_count,
        }


def changed_voxels(original: LatentGrid, edited: LatentGrid) -> VoxelMask:
    """Voxels that appeared, disappeared, or whose feature bits differ."""
    a, b = original.occupancy(), edited.occupancy()
    both = a & b
    common = both.coords()
    fa = original.features[original.rows_of(common)]
    fb = edited.features[edited.rows_of(common)]
    differs = np.any(fa.view(np.uint64) != fb.view(np.uint64), axis=1)
    dense = a.dense ^ b.dense
    dense[tuple(common[differs].T)] = True
    return VoxelMask(a.dims, dense)


def preservation_report(original: LatentGrid, edited: LatentGrid, r_pres: VoxelMask) -> PreservationReport:
    """Chamfer and feature MSE restricted to the preserved region, plus a change count."""
    pa = original.coords[r_pres.contains(original.coords)]
    pb = edited.coords[r_pres.contains(edited.coords)]
    if len(pa) == 0 and len(pb) == 0:
        cd = 0.0
    elif len(pa) == 0 or len(pb) == 0:
        cd = float("inf")
    else:
        cd = chamfer_distance(pa, pb)
    common = (original.occupancy() & edited.occupancy() & r_pres).coords()
    if len(common):
        diff = original.features[original.rows_of(common)] - edited.features[edited.rows_of(common)]
        mse = float(np.mean(diff**2))
    else:
        mse = 0.0
    return PreservationReport(cd, mse, len(changed_voxels(original, edited)))
