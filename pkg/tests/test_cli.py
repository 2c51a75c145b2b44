import json

import pytest

from helpers import make_plan, sphere_edit
from voxedit.inpaint import EditPlan
from voxedit.pipeline.artifacts import load_trajectory
from voxedit.pipeline.cli import main
from voxedit.region import EditType
from voxedit.voxel import load_grid, load_mask, read_ply_coords, save_grid, save_mask


@pytest.fixture
def plan_files(tmp_path):
    asset, r = sphere_edit(EditType.MODIFICATION)
    save_grid(asset.grid, tmp_path / "asset.vxg")
    save_mask(r, tmp_path / "r.vxm")
    plan = make_plan(EditType.MODIFICATION, r, bandwidth=2.0, steps=6)
    (tmp_path / "plan.json").write_text(json.dumps(plan.to_json("r.vxm")))
    return tmp_path


def test_synth_writes_grid_and_labels(tmp_path, capsys):
    rc = main(["synth", "--shape", "box", "--resolution", "8", "--seed", "2",
               "--out", str(tmp_path / "b.vxg"), "--labels-out", str(tmp_path / "b.json")])
    assert rc == 0
    g = load_grid(tmp_path / "b.vxg")
    assert g.dims.resolution == 8 and len(g) > 0
    assert "box" in capsys.readouterr().out
    assert (tmp_path / "b.json").is_file()


def test_seed_is_required(tmp_path):
    with pytest.raises(SystemExit) as info:
        main(["synth", "--shape", "box", "--out", str(tmp_path / "b.vxg")])
    assert info.value.code == 2


def test_config_file_supplies_defaults(tmp_path):
    (tmp_path / "s.cfg").write_text(f"shape = sphere\nseed = 5\nresolution = 8\nout = {tmp_path / 'c.vxg'}\n")
    assert main(["synth", "--config", str(tmp_path / "s.cfg")]) == 0
    a = load_grid(tmp_path / "c.vxg")
    assert main(["synth", "--config", str(tmp_path / "s.cfg"), "--seed", "6", "--out", str(tmp_path / "d.vxg")]) == 0
    assert load_grid(tmp_path / "d.vxg") != a
    (tmp_path / "bad.cfg").write_text("colour = red\n")
    with pytest.raises(SystemExit):
        main(["synth", "--config", str(tmp_path / "bad.cfg")])


def test_segment_and_detect_region(tmp_path):
    main(["synth", "--shape", "dumbbell", "--seed", "0", "--out", str(tmp_path / "g.vxg")])
    assert main(["segment", "--grid", str(tmp_path / "g.vxg"), "--granularity", "3", "--seed", "0",
                 "--out", str(tmp_path / "l.json")]) == 0
    rc = main(["detect-region", "--grid", str(tmp_path / "g.vxg"), "--labels", str(tmp_path / "l.json"),
               "--edit-parts", "0", "--type", "modification", "--out", str(tmp_path / "r.vxm")])
    assert rc == 0 and len(load_mask(tmp_path / "r.vxm")) > 0
    main(["detect-region", "--grid", str(tmp_path / "g.vxg"), "--type", "addition", "--out", str(tmp_path / "a.vxm")])
    g = load_grid(tmp_path / "g.vxg")
    assert len(load_mask(tmp_path / "a.vxm") & g.occupancy()) == 0


def test_invert_then_edit_with_reused_trajectories(plan_files, toy_models_dir, capsys):
    d = plan_files
    args = ["--asset", str(d / "asset.vxg"), "--plan", str(d / "plan.json"), "--models", str(toy_models_dir)]
    assert main(["invert", *args, "--out", str(d / "t2.txt"), "--out-s1", str(d / "t1.txt")]) == 0
    traj, grid = load_trajectory(d / "t2.txt")
    assert traj.schedule.steps == 6 and grid == load_grid(d / "asset.vxg")
    capsys.readouterr()
    assert main(["edit", *args, "--out", str(d / "e1.vxg"), "--report", str(d / "rep.json")]) == 0
    printed = json.loads(capsys.readouterr().out)
    assert printed["run"]["wall_time_s"] >= 0
    assert main(["edit", *args, "--out", str(d / "e2.vxg"),
                 "--trajectory", str(d / "t2.txt"), "--trajectory-s1", str(d / "t1.txt")]) == 0
    assert load_grid(d / "e1.vxg") == load_grid(d / "e2.vxg")
    rep = json.loads((d / "rep.json").read_text())
    assert rep["feature_mse_pres"] > 0 and rep["chamfer_pres"] == 0.0


def test_report_and_export(plan_files, capsys):
    d = plan_files
    assert main(["report", "--original", str(d / "asset.vxg"), "--edited", str(d / "asset.vxg"),
                 "--region", str(d / "r.vxm"), "--out", str(d / "rep.json")]) == 0
    rep = json.loads((d / "rep.json").read_text())
    assert rep["feature_mse_pres"] == 0.0 and rep["changed_voxel_count"] == 0
    assert main(["export-ply", "--grid", str(d / "asset.vxg"), "--out", str(d / "a.ply")]) == 0
    assert len(read_ply_coords(d / "a.ply")) == len(load_grid(d / "asset.vxg"))


def test_train_toy_small(tmp_path):
    rc = main(["train-toy", "--resolution", "8", "--channels", "2", "--steps", "3", "--dataset-size", "2",
               "--hidden", "8", "--seed", "0", "--out", str(tmp_path / "m")])
    assert rc == 0 and len(list((tmp_path / "m").glob("*.vfm"))) == 4


def test_errors_exit_with_code_one(tmp_path, capsys):
    assert main(["export-ply", "--grid", str(tmp_path / "missing.vxg"), "--out", str(tmp_path / "x.ply")]) == 1
    assert "FileNotFoundError" in capsys.readouterr().err
    (tmp_path / "bad.vxg").write_text("VXG9 1 1 0\n")
    assert main(["export-ply", "--grid", str(tmp_path / "bad.vxg"), "--out", str(tmp_path / "x.ply")]) == 1


def test_pipeline_subcommand(tmp_path, toy_models_dir, capsys):
    from voxedit.pipeline.demo import prepare_demo

    cfg = prepare_demo(tmp_path / "run", EditType.DELETION, toy_models_dir, steps=4)
    capsys.readouterr()
    assert main(["pipeline", "--config", str(cfg)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["status"] == "complete" and "edited.vxg" in out["artifacts"]
    assert main(["pipeline", "--config", str(cfg), "--resume-from", "edit"]) == 0
    with pytest.raises(SystemExit):
        main(["pipeline", "--config", str(cfg), "--resume-from", "paint"])
    plan = EditPlan.load(tmp_path / "run" / "out" / "plan.json")
    assert plan.edit_type is EditType.DELETION
    (cfg.parent / "fixtures" / "guidance").rename(cfg.parent / "fixtures" / "gone")
    assert main(["pipeline", "--config", str(cfg), "--output", "fail"]) == 1
    assert "guidance" in capsys.readouterr().err
