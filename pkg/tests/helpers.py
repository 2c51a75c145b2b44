"""Shared builders for editing tests."""

from voxedit.flow import CfgParams, CondKind, TimeSchedule, Trajectory, one_hot_condition
from voxedit.inpaint import EditPlan, InterleavePolicy, SoftMaskParams
from voxedit.pipeline.synth import make_synthetic_asset
from voxedit.region import EditType, Partition, compute_edit_region, partition_from_labels
from voxedit.voxel import GridDims

DIMS = GridDims(16, 8)


def make_plan(edit_type, r_edit, bandwidth=0.0, steps=8, seed=0, policy=InterleavePolicy.TEXT_FIRST, cfg=1.0):
    return EditPlan(
        edit_type=edit_type,
        r_edit=r_edit,
        cond_original=one_hot_condition(0),
        cond_text_s1=one_hot_condition(1),
        cond_text_s2=one_hot_condition(1),
        cond_image=one_hot_condition(2, CondKind.IMAGE),
        steps_s1=steps,
        steps_s2=steps,
        cfg_s1=CfgParams(cfg),
        cfg_s2=CfgParams(cfg),
        soft=SoftMaskParams(bandwidth),
        policy=policy,
        seed=seed,
    )


def sphere_edit(edit_type, seed=0, shape="sphere"):
    """Asset plus the region for editing its part 1 (or adding around it)."""
    asset = make_synthetic_asset(shape, DIMS, seed)
    dims = GridDims(DIMS.resolution)
    if edit_type is EditType.ADDITION:
        part = Partition.addition(asset.grid.coords)
    else:
        part = partition_from_labels(asset.labels, {1})
    return asset, compute_edit_region(edit_type, part, dims)


def preserved_rows_equal(original, edited, r_pres) -> bool:
    common = (original.occupancy() & edited.occupancy() & r_pres).coords()
    a = original.features[original.rows_of(common)]
    b = edited.features[edited.rows_of(common)]
    return a.tobytes() == b.tobytes()


def random_trajectory(rng, rows=20, channels=3, steps=6):
    sched = TimeSchedule.uniform(steps)
    return Trajectory(sched, tuple(rng.standard_normal((rows, channels)) for _ in sched.times))


ACCEPTANCE_LINES: list[str] = []


def acceptance(number: int, title: str, ok: bool, detail: str) -> bool:
    """Record and print one PASS/FAIL line for an acceptance criterion."""
    line = f"criterion {number} {'PASS' if ok else 'FAIL'}: {title} ({detail})"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok
