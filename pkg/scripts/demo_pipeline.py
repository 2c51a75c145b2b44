"""Record fixtures for the three edit types on a synthetic sphere and replay them.

Each run is executed twice from the recorded fixtures; the script checks the
two manifests agree and prints the preservation metrics.
"""

import argparse
import json
import shutil
from pathlib import Path

from voxedit.pipeline.config import RunConfig
from voxedit.pipeline.demo import ensure_models, prepare_demo
from voxedit.pipeline.run import run_edit_pipeline
from voxedit.region import EditType
from voxedit.voxel import GridDims


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--workdir", default="demo_runs")
    ap.add_argument("--train-steps", type=int, default=2000)
    ap.add_argument("--steps", type=int, default=20)
    ap.add_argument("--bandwidth", type=float, default=3.0)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    work = Path(args.workdir)
    dims = GridDims(16, 8)
    models = ensure_models(work / "models", dims, args.seed, args.train_steps)
    for edit_type in EditType:
        root = work / edit_type.value
        cfg_path = prepare_demo(root, edit_type, models, dims=dims, seed=args.seed,
                                steps=args.steps, bandwidth=args.bandwidth)
        a = run_edit_pipeline(RunConfig.from_file(cfg_path))
        shutil.copytree(root / "out", root / "out_first", dirs_exist_ok=True)
        b = run_edit_pipeline(RunConfig.from_file(cfg_path))
        same = a.artifacts == b.artifacts and a.inputs == b.inputs
        m = {k: v for k, v in b.metrics.items() if k != "run"}
        print(f"{edit_type.value:>12}: deterministic={same} {json.dumps(m, sort_keys=True)}")


if __name__ == "__main__":
    main()
