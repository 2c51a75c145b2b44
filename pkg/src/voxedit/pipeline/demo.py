"""Self-contained synthetic edit runs: asset, toy models, fixtures and config on disk."""

from __future__ import annotations

from pathlib import Path

from ..inpaint import ToyModels
from ..region import EditType
from ..voxel.grid import GridDims
from ..voxel.io import save_grid
from .artifacts import save_labels
from .config import RunConfig, format_kv
from .fixtures import scripted_provider
from .models import train_toy_models
from .run import run_edit_pipeline
from .synth import make_synthetic_asset

PROMPTS = {
    EditType.ADDITION: "put a party hat on top",
    EditType.MODIFICATION: "turn the cap into a spiky crown",
    EditType.DELETION: "remove the cap",
}


def ensure_models(directory, dims: GridDims, seed: int = 0, steps: int = 2000) -> Path:
    """Train and save toy models unless ``directory`` already holds a full set."""
    d = Path(directory)
    if not all((d / name).is_file() for name in ToyModels.FILES.values()):
        train_toy_models(dims, seed=seed, steps=steps).save(d)
    return d


def prepare_demo(root, edit_type: EditType, models_dir, shape: str = "sphere",
                 dims: GridDims = GridDims(16, 8), seed: int = 0, steps: int = 20,
                 bandwidth: float = 3.0, use_labels: bool = True) -> Path:
    """Write asset, labels, recorded fixtures and a config file under ``root``.

    Fixtures are produced by running the pipeline once against a scripted
    provider; the returned config replays them with no live access.
    """
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    asset = make_synthetic_asset(shape, dims, seed)
    save_grid(asset.grid, root / "asset.vxg")
    save_labels(root / "labels.json", asset.labels)
    values = {
        "asset": "asset.vxg",
        "models": str(Path(models_dir).resolve()),
        "fixtures": "fixtures",
        "output": "recording",
        "prompt": PROMPTS[edit_type],
        "seed": seed,
        "steps_s1": steps,
        "steps_s2": steps,
        "bandwidth": bandwidth,
    }
    if use_labels:
        values["labels"] = "labels.json"
    provider = scripted_provider(root / "fixtures", asset, edit_type, seed=seed)
    run_edit_pipeline(RunConfig.from_dict(values, root), provider)
    values["output"] = "out"
    path = root / "run.cfg"
    path.write_text(f"# synthetic {edit_type.value} of a {shape}\n" + format_kv(values))
    return path
