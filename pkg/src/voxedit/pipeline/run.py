"""End-to-end edit pipeline.

Stages run in order and each one writes its artifacts to the output
directory; a run can resume from any stage, reloading earlier artifacts
from disk instead of recomputing them::

    guidance  -> bundle.json
    segment   -> labels.json, selection.json
    region    -> region.vxm, region_s1.vxm
    image     -> image_guidance.bin, view.json
    plan      -> plan.json
    invert    -> traj_s2.txt, traj_s1.txt (structure edits only)
    edit      -> edited.vxg
    report    -> report.json

``manifest.json`` is written last (also on failure) with SHA-256 hashes of
every input and artifact.
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import StageFault
from ..flow.core import CfgParams
from ..guidance.image import embed_image, request_image_edit
from ..guidance.parts import choose_granularity, multi_granularity_segment, request_part_selection
from ..guidance.providers import Provider
from ..guidance.text import GuidanceBundle, embed_text, parse_bundle, request_text_guidance
from ..guidance.views import GUIDANCE_VIEWS, View, ViewSet, canonical_views, render_views, select_best_view
from ..inpaint import (
    EditPlan,
    InterleavePolicy,
    ToyModels,
    edit_asset,
    encode_structure,
    invert_stage1,
    invert_stage2,
    preservation_report,
)
from ..region import EditType, Partition, compute_edit_region, partition_from_labels
from ..voxel.geometry import downscale_mask, majority_vote_labels, voxel_centers
from ..voxel.grid import GridDims
from ..voxel.io import file_sha256, load_grid, load_mask, save_grid, save_mask
from .artifacts import load_labels, load_trajectory, save_labels, save_trajectory, write_json
from .config import RunConfig

log = logging.getLogger(__name__)

STAGES = ("guidance", "segment", "region", "image", "plan", "invert", "edit", "report")
STAGE_ARTIFACTS = {
    "guidance": ("bundle.json",),
    "segment": ("labels.json", "selection.json"),
    "region": ("region.vxm", "region_s1.vxm"),
    "image": ("image_guidance.bin", "view.json"),
    "plan": ("plan.json",),
    "invert": ("traj_s2.txt", "traj_s1.txt"),
    "edit": ("edited.vxg",),
    "report": ("report.json",),
}


def selection_views() -> ViewSet:
    """24 candidate views: 8 azimuths at three elevations."""
    views = []
    for j, elev in enumerate((0.0, 30.0, -30.0)):
        for i in range(8):
            views.append(View(8 * j + i, 45.0 * i, elev))
    return ViewSet(tuple(views))


@dataclass(frozen=True)
class RunManifest:
    config: dict
    inputs: dict
    artifacts: dict
    metrics: dict
    timings: dict
    status: str = "complete"
    failed_stage: str | None = None
    diagnostics: str | None = None
    partial: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "config": self.config,
            "inputs": self.inputs,
            "artifacts": self.artifacts,
            "metrics": self.metrics,
            "timings": self.timings,
            "status": self.status,
            "failed_stage": self.failed_stage,
            "diagnostics": self.diagnostics,
            "partial_artifacts": self.partial,
        }

    @classmethod
    def load(cls, path) -> RunManifest:
        d = json.loads(Path(path).read_text())
        return cls(d["config"], d["inputs"], d["artifacts"], d["metrics"], d["timings"],
                   d["status"], d["failed_stage"], d["diagnostics"], d["partial_artifacts"])

    def verify(self, directory) -> bool:
        """Recompute every artifact hash from the files in ``directory``."""
        d = Path(directory)
        return all(file_sha256(d / name) == h for name, h in self.artifacts.items())


class _Run:
    def __init__(self, config: RunConfig, provider: Provider):
        self.cfg = config
        self.provider = provider
        self.out = Path(config.output)
        self.asset = load_grid(config.asset)
        self.dims = GridDims(self.asset.dims.resolution)
        self.models = ToyModels.load(config.models)
        self.written: list[str] = []
        self.points = voxel_centers(self.asset.coords, self.dims.resolution)

    def path(self, name: str) -> Path:
        return self.out / name

    def wrote(self, *names: str):
        self.written.extend(n for n in names if n not in self.written)

    def stage_outputs(self, stage: str) -> list[str]:
        """Artifacts a completed ``stage`` leaves for this run (stale files from other runs excluded)."""
        names = STAGE_ARTIFACTS[stage]
        if stage == "invert":
            if not self.cfg.dump_trajectories:
                return []
            if self.plan.edit_type is EditType.DELETION:
                names = ("traj_s2.txt",)
        return [n for n in names if self.path(n).is_file()]

    # guidance

    def run_guidance(self):
        views = render_views(self.asset.coords, self.dims.resolution, canonical_views(GUIDANCE_VIEWS))
        self.bundle = request_text_guidance(views, self.cfg.prompt, self.provider)
        write_json(self.path("bundle.json"), self.bundle.to_json())
        self.wrote("bundle.json")

    def load_guidance(self):
        self.bundle = parse_bundle(json.loads(self.path("bundle.json").read_text()))

    # segmentation and part selection

    def run_segment(self):
        cfg = self.cfg
        if self.bundle.edit_type is EditType.ADDITION:
            self.labeling = None
            selection = {"granularity": None, "edit_parts": []}
        elif cfg.labels is not None:
            self.labeling = load_labels(cfg.labels, self.dims.resolution)
            if cfg.edit_parts is not None:
                ids = list(cfg.edit_parts)
            else:
                labs = {self.labeling.part_count: self._labels_per_point(self.labeling)}
                _, ids = request_part_selection(self.points, labs, self.bundle.target_part_names, self.provider)
            selection = {"granularity": self.labeling.part_count, "edit_parts": ids}
        else:
            seg_provider = self.provider if cfg.segmentation == "provider" else None
            labelings = multi_granularity_segment(self.points, seg_provider, cfg.seed)
            if cfg.edit_parts is not None:
                s = cfg.granularity or choose_granularity(labelings)
                ids = list(cfg.edit_parts)
            else:
                s, ids = request_part_selection(self.points, labelings, self.bundle.target_part_names, self.provider)
            self.labeling = majority_vote_labels(self.points, labelings[s], self.dims, s)
            selection = {"granularity": s, "edit_parts": ids}
        if self.labeling is not None:
            save_labels(self.path("labels.json"), self.labeling)
            self.wrote("labels.json")
        write_json(self.path("selection.json"), selection)
        self.wrote("selection.json")
        self._make_partition(selection)

    def _labels_per_point(self, labeling) -> np.ndarray:
        rows = {tuple(c): l for c, l in zip(labeling.coords.tolist(), labeling.labels.tolist())}
        return np.array([rows[tuple(c)] for c in self.asset.coords.tolist()], dtype=np.int64)

    def _make_partition(self, selection):
        if self.bundle.edit_type is EditType.ADDITION:
            self.partition = Partition.addition(self.asset.coords)
        else:
            self.partition = partition_from_labels(self.labeling, selection["edit_parts"])

    def load_segment(self):
        selection = json.loads(self.path("selection.json").read_text())
        lab = self.path("labels.json")
        self.labeling = load_labels(lab, self.dims.resolution) if lab.exists() else None
        self._make_partition(selection)

    # region

    def run_region(self):
        self.region = compute_edit_region(self.bundle.edit_type, self.partition, self.dims, self.cfg.region_params)
        self.region_s1 = downscale_mask(self.region, self.cfg.factor, self.cfg.rho)
        save_mask(self.region, self.path("region.vxm"))
        save_mask(self.region_s1, self.path("region_s1.vxm"))
        self.wrote("region.vxm", "region_s1.vxm")

    def load_region(self):
        self.region = load_mask(self.path("region.vxm"))
        self.region_s1 = load_mask(self.path("region_s1.vxm"))

    # image guidance

    def run_image(self):
        views = render_views(self.asset.coords, self.dims.resolution, selection_views())
        if self.cfg.view_selection == "provider":
            vid = select_best_view(views, self.bundle, self.provider, self.cfg.prompt)
        else:
            vid = select_best_view(views, coords=self.asset.coords, resolution=self.dims.resolution,
                                   p_edit=self.partition.p_edit)
        guidance = request_image_edit(views.get(vid).payload, self.cfg.prompt,
                                      self.bundle.new_part_description, self.provider)
        self.image = guidance.condition
        self.path("image_guidance.bin").write_bytes(guidance.payload)
        write_json(self.path("view.json"), {"view_id": vid})
        self.wrote("image_guidance.bin", "view.json")

    def load_image(self):
        self.image = embed_image(self.path("image_guidance.bin").read_bytes())

    # plan

    def run_plan(self):
        cfg, b = self.cfg, self.bundle
        self.plan = EditPlan(
            edit_type=b.edit_type,
            r_edit=self.region,
            r_edit_stage1=self.region_s1,
            cond_original=embed_text(b.original_description),
            cond_text_s1=embed_text(b.stage1_text),
            cond_text_s2=embed_text(b.stage2_text),
            cond_image=self.image,
            rho=cfg.rho,
            factor=cfg.factor,
            steps_s1=cfg.steps_s1,
            steps_s2=cfg.steps_s2,
            cfg_s1=CfgParams(cfg.cfg_s1),
            cfg_s2=CfgParams(cfg.cfg_s2),
            soft=cfg.soft_params,
            policy=InterleavePolicy(cfg.interleave),
            stepper=cfg.stepper,
            seed=cfg.seed,
        )
        write_json(self.path("plan.json"), self.plan.to_json("region.vxm", "region_s1.vxm"))
        self.wrote("plan.json")

    def load_plan(self):
        self.plan = EditPlan.load(self.path("plan.json"))
        self.region = self.plan.r_edit

    # inversion

    def _inversion_source(self):
        if self.plan.edit_type is EditType.DELETION:
            return self.asset.subset(~self.plan.r_edit.contains(self.asset.coords))
        return self.asset

    def run_invert(self):
        src = self._inversion_source()
        self.traj2 = invert_stage2(src, self.plan, self.models)
        self.traj1 = None
        if self.plan.edit_type is not EditType.DELETION:
            self.traj1 = invert_stage1(self.asset, self.plan, self.models)
        if self.cfg.dump_trajectories:
            save_trajectory(self.path("traj_s2.txt"), self.traj2, src.dims, src.coords)
            self.wrote("traj_s2.txt")
            if self.traj1 is not None:
                dims1, coords1, _ = encode_structure(self.asset.occupancy(), self.plan.factor)
                save_trajectory(self.path("traj_s1.txt"), self.traj1, dims1, coords1)
                self.wrote("traj_s1.txt")

    def load_invert(self):
        self.traj2, _ = load_trajectory(self.path("traj_s2.txt"))
        self.traj1 = None
        if self.plan.edit_type is not EditType.DELETION:
            self.traj1, _ = load_trajectory(self.path("traj_s1.txt"))

    # editing and report

    def run_edit(self):
        kw = {"trajectory_s2": self.traj2}
        if self.traj1 is not None:
            kw["trajectory_s1"] = self.traj1
        self.edited = edit_asset(self.asset, self.plan, self.models, **kw).grid
        save_grid(self.edited, self.path("edited.vxg"))
        self.wrote("edited.vxg")

    def load_edit(self):
        self.edited = load_grid(self.path("edited.vxg"))

    def run_report(self):
        rep = preservation_report(self.asset, self.edited, self.region.complement())
        meta = {
            "edit_type": self.plan.edit_type.value,
            "stepper": self.plan.stepper,
            "steps_s1": self.plan.steps_s1,
            "steps_s2": self.plan.steps_s2,
            "bandwidth": self.plan.soft.bandwidth,
            "voxels_before": len(self.asset),
            "voxels_after": len(self.edited),
        }
        self.metrics = {**rep.to_json(), "run": meta}
        write_json(self.path("report.json"), self.metrics)
        self.wrote("report.json")

    def load_report(self):
        self.metrics = json.loads(self.path("report.json").read_text())

    def inputs(self) -> dict:
        cfg = self.cfg
        d = {"asset": file_sha256(cfg.asset)}
        for name in sorted(ToyModels.FILES.values()):
            d[f"models/{name}"] = file_sha256(Path(cfg.models) / name)
        if cfg.labels is not None:
            d["labels"] = file_sha256(cfg.labels)
        root = self.provider.config.fixture_dir
        for p in sorted(set(self.provider.accessed)):
            name = str(p.relative_to(root)) if root is not None else p.name
            d[f"fixtures/{name}"] = file_sha256(p)
        return d

    def artifact_hashes(self) -> dict:
        return {name: file_sha256(self.path(name)) for name in sorted(self.written)}


def run_edit_pipeline(config: RunConfig, provider: Provider | None = None,
                      resume_from: str | None = None) -> RunManifest:
    """Run (or resume) the pipeline and write ``manifest.json``."""
    config.validate(require_fixtures=provider is None)
    if resume_from is not None and resume_from not in STAGES:
        raise ValueError(f"unknown stage {resume_from!r}; choose from {STAGES}")
    start = STAGES.index(resume_from) if resume_from else 0
    Path(config.output).mkdir(parents=True, exist_ok=True)
    provider = provider or Provider(config.provider_config())
    run = _Run(config, provider)
    timings = {}
    for i, stage in enumerate(STAGES):
        t0 = time.perf_counter()
        try:
            if i >= start:
                getattr(run, "run_" + stage)()
            else:
                getattr(run, "load_" + stage)()
                run.wrote(*run.stage_outputs(stage))
        except Exception as exc:
            manifest = RunManifest(
                config.snapshot(), _safe(run.inputs), _safe(run.artifact_hashes), {}, timings,
                status="failed", failed_stage=stage, diagnostics=f"{type(exc).__name__}: {exc}",
                partial=sorted(run.written),
            )
            write_json(run.path("manifest.json"), manifest.to_json())
            raise StageFault(stage, exc) from exc
        timings[stage] = round(time.perf_counter() - t0, 6)
        log.info("stage %s done in %.3fs", stage, timings[stage])
    manifest = RunManifest(config.snapshot(), run.inputs(), run.artifact_hashes(), run.metrics, timings)
    write_json(run.path("manifest.json"), manifest.to_json())
    return manifest


def _safe(fn) -> dict:
    try:
        return fn()
    except Exception:  # a broken artifact must not hide the original failure
        return {}
