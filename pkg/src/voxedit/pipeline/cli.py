"""Command-line entry point.

Every subcommand accepts ``--config FILE``: a flat ``key = value`` file
whose keys are the subcommand's long option names (dashes or underscores).
Values on the command line win over the file. For ``pipeline`` the file is
the run configuration documented in :mod:`voxedit.pipeline.config`.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from ..errors import VoxEditError
from ..guidance.parts import choose_granularity, multi_granularity_segment
from ..guidance.providers import Provider, ProviderConfig
from ..inpaint import (
    EditPlan,
    ToyModels,
    edit_asset,
    encode_structure,
    invert_stage1,
    invert_stage2,
    preservation_report,
)
from ..region import EditType, Partition, RegionParams, compute_edit_region, partition_from_labels
from ..voxel.geometry import majority_vote_labels, voxel_centers
from ..voxel.grid import GridDims
from ..voxel.io import export_ply, load_grid, load_mask, save_grid, save_mask
from .artifacts import load_labels, load_trajectory, save_labels, save_trajectory, write_json
from .config import RunConfig, parse_kv
from .models import train_toy_models
from .run import STAGES, run_edit_pipeline
from .sweep import DEFAULT_RANKING, rank_plans
from .synth import SHAPES, make_synthetic_asset

log = logging.getLogger("voxedit")


def _int_list(text: str) -> list[int]:
    return [int(s) for s in text.split(",") if s.strip()]


def cmd_synth(a):
    asset = make_synthetic_asset(a.shape, GridDims(a.resolution, a.channels), a.seed, a.scale)
    save_grid(asset.grid, a.out)
    if a.labels_out:
        save_labels(a.labels_out, asset.labels)
    print(f"{a.shape}: {len(asset.grid)} voxels -> {a.out}")


def cmd_train_toy(a):
    dims = GridDims(a.resolution, a.channels)
    models = train_toy_models(dims, a.factor, a.seed, a.steps, a.dataset_size, a.hidden)
    for p in models.save(a.out):
        print(p)


def cmd_segment(a):
    grid = load_grid(a.grid)
    points = voxel_centers(grid.coords, grid.dims.resolution)
    provider = None
    if a.fixtures:
        provider = Provider(ProviderConfig(fixture_dir=a.fixtures))
    labelings = multi_granularity_segment(points, provider, a.seed)
    s = a.granularity or choose_granularity(labelings)
    if s not in labelings:
        raise SystemExit(f"granularity {s} outside 3..8")
    labeling = majority_vote_labels(points, labelings[s], GridDims(grid.dims.resolution), s)
    save_labels(a.out, labeling)
    print(f"{s} parts -> {a.out}")


def cmd_detect_region(a):
    grid = load_grid(a.grid)
    dims = GridDims(grid.dims.resolution)
    edit_type = EditType.parse(a.type)
    if edit_type is EditType.ADDITION:
        partition = Partition.addition(grid.coords)
    else:
        if not a.labels:
            raise SystemExit("--labels is required for modification and deletion")
        partition = partition_from_labels(load_labels(a.labels, dims.resolution), _int_list(a.edit_parts or ""))
    region = compute_edit_region(edit_type, partition, dims, RegionParams(a.k, a.tau))
    save_mask(region, a.out)
    print(f"{len(region)} edit voxels -> {a.out}")


def cmd_invert(a):
    asset = load_grid(a.asset)
    plan = EditPlan.load(a.plan)
    models = ToyModels.load(a.models)
    src = asset
    if plan.edit_type is EditType.DELETION:
        src = asset.subset(~plan.r_edit.contains(asset.coords))
    save_trajectory(a.out, invert_stage2(src, plan, models), src.dims, src.coords)
    print(f"stage-2 trajectory -> {a.out}")
    if a.out_s1 and plan.edit_type is not EditType.DELETION:
        dims1, coords1, _ = encode_structure(asset.occupancy(), plan.factor)
        save_trajectory(a.out_s1, invert_stage1(asset, plan, models), dims1, coords1)
        print(f"stage-1 trajectory -> {a.out_s1}")


def cmd_edit(a):
    asset = load_grid(a.asset)
    models = ToyModels.load(a.models)
    paths = a.plan if isinstance(a.plan, list) else a.plan.split(",")
    plans = [EditPlan.load(p) for p in paths]
    if len(plans) > 1:
        return _edit_sweep(a, asset, plans, paths, models)
    plan = plans[0]
    kw = {}
    if a.trajectory:
        kw["trajectory_s2"] = load_trajectory(a.trajectory)[0]
    if a.trajectory_s1:
        kw["trajectory_s1"] = load_trajectory(a.trajectory_s1)[0]
    t0 = time.perf_counter()
    result = edit_asset(asset, plan, models, **kw)
    wall = time.perf_counter() - t0
    save_grid(result.grid, a.out)
    rep = preservation_report(asset, result.grid, plan.r_edit.complement()).to_json()
    rep["run"] = {
        "edit_type": plan.edit_type.value,
        "stepper": plan.stepper,
        "steps_s1": plan.steps_s1,
        "steps_s2": plan.steps_s2,
        "bandwidth": plan.soft.bandwidth,
        "wall_time_s": round(wall, 4),
    }
    if a.report:
        write_json(a.report, rep)
    print(json.dumps(rep, sort_keys=True))


def _edit_sweep(a, asset, plans, paths, models):
    if a.trajectory or a.trajectory_s1:
        raise ValueError("saved trajectories apply to a single plan only")
    provider = Provider(ProviderConfig(fixture_dir=a.fixtures)) if a.fixtures else None
    ranking = tuple(k.strip() for k in a.rank_by.split(",") if k.strip())
    t0 = time.perf_counter()
    ranked = rank_plans(asset, plans, models, a.prompt or "", provider, ranking)
    wall = time.perf_counter() - t0
    save_grid(ranked[0].grid, a.out)
    rep = {
        **ranked[0].report,
        "ranking": [{"plan": str(paths[c.index]), "alignment": c.alignment, **c.report} for c in ranked],
        "run": {"rank_by": list(ranking), "plans": len(plans), "wall_time_s": round(wall, 4)},
    }
    if a.report:
        write_json(a.report, rep)
    print(json.dumps(rep, sort_keys=True))


def cmd_pipeline(a):
    if not a.config:
        raise SystemExit("pipeline needs --config")
    overrides = {"seed": a.seed, "output": a.output}
    config = RunConfig.from_file(a.config, **overrides)
    manifest = run_edit_pipeline(config, resume_from=a.resume_from)
    print(json.dumps({"status": manifest.status, "artifacts": manifest.artifacts,
                      "metrics": manifest.metrics}, indent=2, sort_keys=True))


def cmd_export_ply(a):
    grid = load_grid(a.grid)
    export_ply(grid, a.out)
    print(f"{len(grid)} vertices -> {a.out}")


def cmd_report(a):
    original, edited = load_grid(a.original), load_grid(a.edited)
    r_pres = load_mask(a.region).complement() if a.region else original.occupancy() | edited.occupancy()
    rep = preservation_report(original, edited, r_pres).to_json()
    if a.out:
        write_json(a.out, rep)
    print(json.dumps(rep, sort_keys=True))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="voxedit", description="Training-free local editing of voxel latents (toy scale).")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", help="key = value file supplying option defaults")
        sp.set_defaults(func=fn)
        return sp

    s = add("synth", cmd_synth, "write a synthetic primitive and its part labels")
    s.add_argument("--shape", choices=SHAPES, required=True)
    s.add_argument("--resolution", type=int, default=16)
    s.add_argument("--channels", type=int, default=8)
    s.add_argument("--scale", type=float, default=1.0)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--labels-out")

    s = add("train-toy", cmd_train_toy, "train the four toy velocity fields")
    s.add_argument("--resolution", type=int, default=16)
    s.add_argument("--channels", type=int, default=8)
    s.add_argument("--factor", type=int, default=4)
    s.add_argument("--steps", type=int, default=2000)
    s.add_argument("--dataset-size", type=int, default=12)
    s.add_argument("--hidden", type=int, default=64)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--out", required=True)

    s = add("segment", cmd_segment, "part labels from the seeded fallback or fixtures")
    s.add_argument("--grid", required=True)
    s.add_argument("--granularity", type=int)
    s.add_argument("--fixtures")
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--out", required=True)

    s = add("detect-region", cmd_detect_region, "compute the edit region mask")
    s.add_argument("--grid", required=True)
    s.add_argument("--labels")
    s.add_argument("--edit-parts")
    s.add_argument("--type", required=True, choices=[t.value for t in EditType])
    s.add_argument("--k", type=int, default=8)
    s.add_argument("--tau", type=float, default=0.5)
    s.add_argument("--out", required=True)

    s = add("invert", cmd_invert, "invert an asset into flow trajectories")
    s.add_argument("--asset", required=True)
    s.add_argument("--plan", required=True)
    s.add_argument("--models", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--out-s1")

    s = add("edit", cmd_edit, "apply an edit plan, or rank several")
    s.add_argument("--asset", required=True)
    s.add_argument("--plan", required=True, nargs="+", help="one plan, or several to rank (best goes to --out)")
    s.add_argument("--models", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--report")
    s.add_argument("--trajectory")
    s.add_argument("--trajectory-s1")
    s.add_argument("--rank-by", default=",".join(DEFAULT_RANKING),
                   help="comma-separated ranking keys; a leading '-' sorts descending")
    s.add_argument("--fixtures", help="fixture directory holding alignment scores for ranking")
    s.add_argument("--prompt", help="prompt the alignment scores refer to")

    s = add("pipeline", cmd_pipeline, "run the full staged pipeline")
    s.add_argument("--seed", type=int)
    s.add_argument("--output")
    s.add_argument("--resume-from", choices=STAGES)

    s = add("export-ply", cmd_export_ply, "write an ASCII PLY point cloud")
    s.add_argument("--grid", required=True)
    s.add_argument("--out", required=True)

    s = add("report", cmd_report, "preservation metrics between two grids")
    s.add_argument("--original", required=True)
    s.add_argument("--edited", required=True)
    s.add_argument("--region", help="edit region mask; its complement is the preserved set")
    s.add_argument("--out")
    return p


def _peek(argv: list[str]) -> tuple[str | None, str | None]:
    """Subcommand and --config value, found without enforcing required options."""
    command = next((x for x in argv if not x.startswith("-")), None)
    config = None
    for i, x in enumerate(argv):
        if x == "--config" and i + 1 < len(argv):
            config = argv[i + 1]
        elif x.startswith("--config="):
            config = x.split("=", 1)[1]
    return command, config


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]):
    """Use the --config file of the chosen subcommand as option defaults."""
    command, config = _peek(argv)
    subparsers = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    if command == "pipeline" or command not in subparsers.choices or config is None:
        return
    sub = subparsers.choices[command]
    values = {k.replace("-", "_"): v for k, v in parse_kv(Path(config).read_text()).items()}
    actions = {a.dest: a for a in sub._actions if a.option_strings}
    unknown = set(values) - set(actions) - {"config"}
    if unknown:
        parser.error(f"unknown keys in {config}: {', '.join(sorted(unknown))}")
    for dest, value in values.items():
        if dest in actions:
            actions[dest].default = value
            actions[dest].required = False


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
    except (OSError, ValueError) as exc:
        parser.error(str(exc))
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (VoxEditError, ValueError, FileNotFoundError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
