import json

import pytest

from helpers import make_plan, sphere_edit
from voxedit.errors import GuidanceSchemaFault
from voxedit.guidance import FixtureRecorder, Provider, ProviderConfig
from voxedit.inpaint import edit_asset
from voxedit.pipeline.cli import main
from voxedit.pipeline.sweep import alignment_key, rank_plans
from voxedit.region import EditType
from voxedit.voxel import load_grid, save_grid, save_mask


@pytest.fixture(scope="module")
def candidates():
    asset, r = sphere_edit(EditType.MODIFICATION)
    plans = [make_plan(EditType.MODIFICATION, r, bandwidth=3.0), make_plan(EditType.MODIFICATION, r, bandwidth=0.0)]
    return asset, r, plans


def test_preservation_ranking_prefers_hard_mask(candidates, toy_models):
    asset, _, plans = candidates
    ranked = rank_plans(asset.grid, plans, toy_models)
    assert [c.index for c in ranked] == [1, 0]
    assert ranked[0].report["feature_mse_pres"] == 0.0 < ranked[1].report["feature_mse_pres"]
    assert ranked[0].grid == edit_asset(asset.grid, plans[1], toy_models).grid


def test_alignment_scores_override(candidates, toy_models, tmp_path):
    asset, _, plans = candidates
    rec = FixtureRecorder(tmp_path)
    for plan, score in zip(plans, (0.9, 0.2)):
        grid = edit_asset(asset.grid, plan, toy_models).grid
        rec.record("score", alignment_key("crown", grid), {"score": score})
    provider = Provider(ProviderConfig(fixture_dir=tmp_path))
    ranked = rank_plans(asset.grid, plans, toy_models, "crown", provider)
    assert [c.index for c in ranked] == [0, 1] and ranked[0].alignment == 0.9
    ranked = rank_plans(asset.grid, plans, toy_models, "crown", provider, ranking=("feature_mse_pres",))
    assert [c.index for c in ranked] == [1, 0]


def test_ranking_errors(candidates, toy_models, tmp_path):
    asset, _, plans = candidates
    with pytest.raises(ValueError):
        rank_plans(asset.grid, [], toy_models)
    with pytest.raises(ValueError):
        rank_plans(asset.grid, plans, toy_models, ranking=("beauty",))
    grid = edit_asset(asset.grid, plans[0], toy_models).grid
    FixtureRecorder(tmp_path).record("score", alignment_key("p", grid), {"score": "high"})
    with pytest.raises(GuidanceSchemaFault):
        rank_plans(asset.grid, plans[:1], toy_models, "p", Provider(ProviderConfig(fixture_dir=tmp_path)))


def test_cli_edit_ranks_plan_list(candidates, toy_models_dir, tmp_path):
    asset, r, plans = candidates
    save_grid(asset.grid, tmp_path / "a.vxg")
    save_mask(r, tmp_path / "r.vxm")
    for i, plan in enumerate(plans):
        (tmp_path / f"p{i}.json").write_text(json.dumps(plan.to_json("r.vxm")))
    rc = main(["edit", "--asset", str(tmp_path / "a.vxg"), "--plan", str(tmp_path / "p0.json"),
               str(tmp_path / "p1.json"), "--models", str(toy_models_dir), "--out", str(tmp_path / "best.vxg"),
               "--report", str(tmp_path / "rep.json")])
    assert rc == 0
    rep = json.loads((tmp_path / "rep.json").read_text())
    assert [e["plan"].endswith("p1.json") for e in rep["ranking"]] == [True, False]
    assert rep["feature_mse_pres"] == 0.0
    single = tmp_path / "single.vxg"
    main(["edit", "--asset", str(tmp_path / "a.vxg"), "--plan", str(tmp_path / "p1.json"),
          "--models", str(toy_models_dir), "--out", str(single)])
    assert load_grid(tmp_path / "best.vxg") == load_grid(single)
