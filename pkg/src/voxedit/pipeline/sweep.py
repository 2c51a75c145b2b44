"""Run several candidate plans on one asset and rank the results.

Candidates typically differ in their prompt conditions, guidance scale or
bandwidth. Ranking is a lexicographic order over named keys; a key with a
leading ``-`` sorts descending. ``alignment`` is an optional score per
edited grid, replayed from a provider (kind ``score``), that stands in for
a prompt-alignment metric.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..errors import GuidanceSchemaFault
from ..guidance.providers import Provider, bytes_sha256
from ..inpaint import EditPlan, ToyModels, edit_asset, preservation_report
from ..voxel.grid import LatentGrid
from ..voxel.io import format_grid

DEFAULT_RANKING = ("-alignment", "feature_mse_pres", "chamfer_pres")
RANK_KEYS = ("alignment", "feature_mse_pres", "chamfer_pres", "changed_voxel_count")


@dataclass(frozen=True)
class Candidate:
    index: int
    grid: LatentGrid
    report: dict
    alignment: float | None = None

    def value(self, key: str) -> float:
        v = self.alignment if key == "alignment" else self.report[key]
        return math.inf if v is None else float(v)


def grid_digest(grid: LatentGrid) -> str:
    return bytes_sha256(format_grid(grid).encode())


def alignment_key(prompt: str, grid: LatentGrid) -> dict:
    return {"kind": "score", "prompt": prompt, "edited": grid_digest(grid)}


def request_alignment(prompt: str, grid: LatentGrid, provider: Provider) -> float:
    resp = provider.request("score", alignment_key(prompt, grid), {"prompt": prompt})
    try:
        score = float(resp["score"])
    except (KeyError, TypeError, ValueError):
        raise GuidanceSchemaFault("score response needs a numeric 'score'") from None
    if not math.isfinite(score):
        raise GuidanceSchemaFault("score must be finite")
    return score


def sort_key(ranking):
    for k in ranking:
        if k.lstrip("-") not in RANK_KEYS:
            raise ValueError(f"unknown ranking key {k!r}; choose from {RANK_KEYS}")

    def key(c: Candidate):
        out = []
        for k in ranking:
            v = c.value(k.lstrip("-"))
            out.append(-v if k.startswith("-") else v)
        return (*out, c.index)

    return key


def rank_plans(asset: LatentGrid, plans: list[EditPlan], models: ToyModels, prompt: str = "",
               provider: Provider | None = None, ranking=DEFAULT_RANKING) -> list[Candidate]:
    """Edit with every plan; best candidate first.

    Without a provider the alignment key is skipped. Ties keep input order.
    """
    if not plans:
        raise ValueError("need at least one plan")
    if provider is None:
        ranking = tuple(k for k in ranking if k.lstrip("-") != "alignment")
    order = sort_key(ranking)
    out = []
    for i, plan in enumerate(plans):
        grid = edit_asset(asset, plan, models).grid
        report = preservation_report(asset, grid, plan.r_edit.complement()).to_json()
        score = request_alignment(prompt, grid, provider) if provider is not None else None
        out.append(Candidate(i, grid, report, score))
    return sorted(out, key=order)
