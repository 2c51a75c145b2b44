"""On-disk forms of intermediate artifacts: trajectories, part labels, reports."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..flow.core import TimeSchedule, Trajectory
from ..voxel.grid import GridDims, LatentGrid, PartLabeling
from ..voxel.io import format_grid, parse_grid


def save_trajectory(path, trajectory: Trajectory, dims: GridDims, coords: np.ndarray) -> Path:
    """One ``t=<time>`` line followed by a VXG1 block per recorded state."""
    path = Path(path)
    with open(path, "w") as fh:
        for t, state in zip(trajectory.schedule.times, trajectory.states):
            fh.write(f"t={t!r}\n")
            fh.write(format_grid(LatentGrid(dims, coords, state)))
    return path


def load_trajectory(path) -> tuple[Trajectory, LatentGrid]:
    """Trajectory plus the data-end grid (which carries dims and coordinates)."""
    lines = Path(path).read_text().splitlines()
    times, grids, i = [], [], 0
    while i < len(lines):
        if not lines[i].startswith("t="):
            raise ValueError(f"line {i + 1}: expected a 't=<value>' line")
        times.append(float(lines[i][2:]))
        count = int(lines[i + 1].split()[3])
        grids.append(parse_grid(lines[i + 1 : i + 2 + count]))
        i += 2 + count
    traj = Trajectory(TimeSchedule(tuple(times)), tuple(g.features for g in grids))
    return traj, grids[-1]


def labeling_to_json(labeling: PartLabeling) -> dict:
    d = {f"{x},{y},{z}": int(l) for (x, y, z), l in zip(labeling.coords.tolist(), labeling.labels.tolist())}
    d["part_count"] = labeling.part_count
    return d


def labeling_from_json(d: dict, resolution: int) -> PartLabeling:
    d = dict(d)
    count = int(d.pop("part_count"))
    coords = [tuple(int(v) for v in k.split(",")) for k in d]
    return PartLabeling(GridDims(resolution), np.array(coords, dtype=np.int64).reshape(-1, 3),
                        np.array(list(d.values()), dtype=np.int64), count)


def save_labels(path, labeling: PartLabeling) -> Path:
    path = Path(path)
    path.write_text(json.dumps(labeling_to_json(labeling), indent=1) + "\n")
    return path


def load_labels(path, resolution: int) -> PartLabeling:
    return labeling_from_json(json.loads(Path(path).read_text()), resolution)


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
    return path
