import numpy as np
import pytest
from hypothesis import settings

from voxedit.flow.train import TrainConfig, train_toy_flow
from voxedit.pipeline.models import train_toy_models
from voxedit.pipeline.synth import synthetic_dataset
from voxedit.voxel import GridDims

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

TOY_DIMS = GridDims(16, 8)


@pytest.fixture(scope="session")
def toy_models():
    """Four short-trained fields; enough to exercise every editing path."""
    return train_toy_models(TOY_DIMS, seed=0, steps=300, dataset_size=6)


@pytest.fixture(scope="session")
def toy_models_dir(toy_models, tmp_path_factory):
    d = tmp_path_factory.mktemp("models")
    toy_models.save(d)
    return d


@pytest.fixture(scope="session")
def trained_field():
    """Stage-2 style field trained for 2000 steps on synthetic primitives."""
    data = synthetic_dataset(TOY_DIMS, 12, 0)
    conds = {id(a.grid): a.condition() for a in data}
    return train_toy_flow([a.grid for a in data], lambda g: conds[id(g)], TrainConfig(steps=2000), seed=0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    from helpers import ACCEPTANCE_LINES

    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
