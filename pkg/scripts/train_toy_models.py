"""Train the four toy velocity fields and save them as VFM1 checkpoints."""

import argparse
import time

from voxedit.pipeline.models import train_toy_models
from voxedit.voxel import GridDims


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="toy_models")
    ap.add_argument("--resolution", type=int, default=16)
    ap.add_argument("--channels", type=int, default=8)
    ap.add_argument("--steps", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    t0 = time.perf_counter()
    models = train_toy_models(GridDims(args.resolution, args.channels), seed=args.seed, steps=args.steps)
    for p in models.save(args.out):
        print(p)
    print(f"done in {time.perf_counter() - t0:.1f}s")


if __name__ == "__main__":
    main()
