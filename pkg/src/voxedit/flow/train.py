"""Desk-scale rectified-flow training for :class:`MlpField`.

Samples ``x_t = (1 - t) * x_data + t * eps`` and regresses the velocity
target ``eps - x_data``. Conditions are dropped to the zero vector with
probability ``p_uncond`` so the same weights also provide the
unconditional branch for guidance.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import torch

from ..errors import TrainingFault
from ..voxel.grid import LatentGrid
from .core import Condition
from .fields import MlpField


@dataclass(frozen=True)
class TrainConfig:
    steps: int = 2000
    batch_size: int = 256
    hidden: int = 64
    lr: float = 3e-3
    p_uncond: float = 0.1


def _stack_dataset(dataset: Sequence[LatentGrid], cond_fn: Callable[[LatentGrid], Condition]):
    if not dataset:
        raise ValueError("empty training set")
    dims = dataset[0].dims
    if any(g.dims != dims for g in dataset):
        raise ValueError("all training grids must share dims")
    feats, pos, conds = [], [], []
    for g in dataset:
        e = cond_fn(g).embedding
        feats.append(g.features)
        pos.append((g.coords + 0.5) / dims.resolution * 2.0 - 1.0)
        conds.append(np.broadcast_to(e, (len(g), len(e))))
    return dims, np.concatenate(feats), np.concatenate(pos), np.concatenate(conds)


def _init_params(d_in: int, hidden: int, d_out: int, gen: torch.Generator) -> list[torch.Tensor]:
    def uniform(shape, fan_in, gain=1.0):
        bound = gain / np.sqrt(fan_in)
        return ((torch.rand(shape, generator=gen, dtype=torch.float64) * 2 - 1) * bound).requires_grad_()

    return [
        uniform((d_in, hidden), d_in), uniform((hidden,), d_in),
        uniform((hidden, hidden), hidden), uniform((hidden,), hidden),
        uniform((hidden, d_out), hidden, 0.1), uniform((d_out,), hidden, 0.1),
    ]


def _mlp(params, inp):
    w1, b1, w2, b2, w3, b3 = params
    h = torch.tanh(inp @ w1 + b1)
    h = torch.tanh(h @ w2 + b2)
    return h @ w3 + b3


def train_toy_flow(dataset: Sequence[LatentGrid], cond_fn: Callable[[LatentGrid], Condition],
                   hyper: TrainConfig = TrainConfig(), seed: int = 0) -> MlpField:
    dims, feats, pos, conds = _stack_dataset(dataset, cond_fn)
    d, e = dims.channels, conds.shape[1]
    gen = torch.Generator().manual_seed(int(seed))
    X = torch.from_numpy(feats)
    P = torch.from_numpy(pos)
    C = torch.from_numpy(np.ascontiguousarray(conds))
    params = _init_params(d + 1 + e + 3, hyper.hidden, d, gen)
    opt = torch.optim.Adam(params, lr=hyper.lr)
    sched = torch.optim.lr_scheduler.CosineAnnealingLR(opt, T_max=max(hyper.steps, 1))
    n = len(X)
    for step in range(hyper.steps):
        idx = torch.randint(n, (hyper.batch_size,), generator=gen)
        t = torch.rand((hyper.batch_size, 1), generator=gen, dtype=torch.float64)
        eps = torch.randn((hyper.batch_size, d), generator=gen, dtype=torch.float64)
        keep = (torch.rand((hyper.batch_size, 1), generator=gen, dtype=torch.float64) >= hyper.p_uncond)
        x1 = X[idx]
        xt = (1 - t) * x1 + t * eps
        c = C[idx] * keep
        pred = _mlp(params, torch.cat([xt, t, c, P[idx]], dim=1))
        loss = ((pred - (eps - x1)) ** 2).mean()
        if not torch.isfinite(loss):
            raise TrainingFault(f"non-finite loss at step {step}")
        opt.zero_grad()
        loss.backward()
        opt.step()
        sched.step()
    arrays = {name: p.detach().numpy().copy() for name, p in zip(("w1", "b1", "w2", "b2", "w3", "b3"), params)}
    return MlpField(arrays, d, dims.resolution, hyper.hidden, e, seed)


def flow_matching_loss(field, dataset: Sequence[LatentGrid], cond_fn, samples: int = 4096,
                       seed: int = 0) -> float:
    """Monte Carlo estimate of the regression loss on ``dataset``.

    ``field=None`` scores the zero-velocity baseline.
    """
    dims, feats, pos, conds = _stack_dataset(dataset, cond_fn)
    rng = np.random.default_rng(seed)
    idx = rng.integers(len(feats), size=samples)
    t = rng.random((samples, 1))
    eps = rng.standard_normal((samples, dims.channels))
    x1 = feats[idx]
    xt = (1 - t) * x1 + t * eps
    target = eps - x1
    if field is None:
        pred = np.zeros_like(target)
    else:
        pred = field.forward(xt, t, conds[idx], pos[idx])
    return float(np.mean((pred - target) ** 2))
