"""Train the four toy fields (structure/feature x text/image) on synthetic shapes."""

from __future__ import annotations

from ..flow.core import CondKind
from ..flow.train import TrainConfig, train_toy_flow
from ..inpaint import FieldPair, ToyModels, encode_structure
from ..voxel.grid import GridDims, LatentGrid
from .synth import synthetic_dataset


def train_toy_models(dims: GridDims, factor: int = 4, seed: int = 0, steps: int = 2000,
                     dataset_size: int = 12, hidden: int = 64) -> ToyModels:
    assets = synthetic_dataset(dims, dataset_size, seed)
    stage2 = [a.grid for a in assets]
    stage1 = []
    for a in assets:
        dims1, coords1, latent1 = encode_structure(a.grid.occupancy(), factor)
        stage1.append(LatentGrid(dims1, coords1, latent1))
    by_id = {}
    for a, g1, g2 in zip(assets, stage1, stage2):
        by_id[id(g1)] = by_id[id(g2)] = a

    def cond_fn(kind):
        return lambda g: by_id[id(g)].condition(kind)

    hyper = TrainConfig(steps=steps, hidden=hidden)
    fields = {}
    for i, (stage, data) in enumerate((("stage1", stage1), ("stage2", stage2))):
        for j, kind in enumerate((CondKind.TEXT, CondKind.IMAGE)):
            fields[stage, kind] = train_toy_flow(data, cond_fn(kind), hyper, seed=seed * 4 + 2 * i + j)
    return ToyModels(
        FieldPair(fields["stage1", CondKind.TEXT], fields["stage1", CondKind.IMAGE]),
        FieldPair(fields["stage2", CondKind.TEXT], fields["stage2", CondKind.IMAGE]),
    )
