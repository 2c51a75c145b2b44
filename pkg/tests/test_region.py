import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import random_region_instance, split_instance
from voxedit.errors import EmptySet, UnknownPart
from voxedit.region import (
    EditType,
    Partition,
    RegionParams,
    compute_edit_region,
    partition_from_labels,
    preserved_boxes,
    preserved_mask,
    prop_knn,
)
from voxedit.region_oracle import oracle_edit_region, oracle_prop_knn
from voxedit.voxel import GridDims, PartLabeling, VoxelMask

DIMS8 = GridDims(8)


def labeling(labels: dict, dims=DIMS8):
    return PartLabeling.from_map(dims, labels)


def test_partition_from_labels_examples():
    v1, v2, v3 = (0, 0, 0), (1, 0, 0), (2, 0, 0)
    lab = labeling({v1: 0, v2: 1, v3: 1})
    p = partition_from_labels(lab, {1})
    assert p.edit_set() == {v2, v3} and p.pres_set() == {v1}
    assert partition_from_labels(lab, {0, 1}).pres_set() == set()
    with pytest.raises(UnknownPart):
        partition_from_labels(lab, {7})


def test_partition_invariants_enforced():
    a = np.array([(0, 0, 0), (1, 0, 0)])
    with pytest.raises(ValueError):
        Partition(a, a[:1], a[:1], [0])
    with pytest.raises(ValueError):
        Partition(a, a[:1], a[:0], [])


def test_prop_knn_examples():
    asset = [(0, 0, 0), (1, 0, 0), (2, 0, 0)]
    lab = labeling({asset[0]: 1, asset[1]: 0, asset[2]: 0})
    assert prop_knn((0, 1, 0), partition_from_labels(lab, {1}), 2) == 0.5
    assert prop_knn((5, 5, 5), partition_from_labels(lab, {0, 1}), 2) == 1.0
    assert prop_knn((5, 5, 5), Partition.addition(asset), 3) == 0.0


@given(st.integers(0, 2**31 - 1), st.integers(1, 9))
def test_prop_knn_matches_oracle_and_is_quantized(seed, k):
    labels, edit_ids = random_region_instance(np.random.default_rng(seed), max_size=60)
    part = partition_from_labels(labeling(labels), edit_ids)
    asset, p_edit, _ = split_instance(labels, edit_ids)
    v = next(c for c in [(x, y, z) for x in range(8) for y in range(8) for z in range(8)] if c not in labels)
    got = prop_knn(v, part, k)
    assert got == oracle_prop_knn(v, asset, p_edit, k)
    kk = min(k, len(asset))
    assert got * kk == pytest.approx(round(got * kk))


def test_deletion_and_addition_examples():
    lab = labeling({(1, 1, 1): 1, (0, 0, 0): 0})
    r = compute_edit_region(EditType.DELETION, partition_from_labels(lab, {1}), DIMS8)
    assert r.members == {(1, 1, 1)}
    rng = np.random.default_rng(0)
    flat = rng.choice(64, 10, replace=False)
    asset = np.stack(np.unravel_index(flat, (4, 4, 4)), axis=1)
    r = compute_edit_region(EditType.ADDITION, Partition.addition(asset), GridDims(4))
    assert len(r) == 64 - 10
    assert not r.contains(asset).any()


def test_modification_without_preserved_parts_is_full(caplog):
    lab = labeling({(1, 1, 1): 0, (2, 2, 2): 0})
    r = compute_edit_region(EditType.MODIFICATION, partition_from_labels(lab, {0}), DIMS8)
    assert r == VoxelMask.full(DIMS8)
    assert "whole grid" in caplog.text


def test_empty_edit_set_rejected():
    with pytest.raises(EmptySet):
        compute_edit_region(EditType.DELETION, Partition.addition([(0, 0, 0)]), DIMS8)


def test_boxes_are_per_part():
    lab = labeling({(0, 0, 0): 0, (7, 7, 7): 1, (0, 7, 0): 2, (3, 3, 3): 3})
    boxes = preserved_boxes(partition_from_labels(lab, {3}))
    assert [(b.min, b.max) for b in boxes] == [((0, 0, 0),) * 2, ((7, 7, 7),) * 2, ((0, 7, 0),) * 2]


def test_threshold_is_strict():
    # empty voxel (1,0,0) sits between one edit and one preserved voxel: PropKNN = 0.5
    lab = labeling({(0, 0, 0): 0, (2, 0, 0): 1, (0, 1, 0): 0, (2, 1, 0): 0})
    part = partition_from_labels(lab, {1})
    assert prop_knn((1, 0, 0), part, 2) == 0.5
    assert (1, 0, 0) not in compute_edit_region(EditType.MODIFICATION, part, DIMS8, RegionParams(2, 0.5))
    assert (1, 0, 0) in compute_edit_region(EditType.MODIFICATION, part, DIMS8, RegionParams(2, 0.4))


@given(st.integers(0, 2**31 - 1), st.sampled_from([2, 4, 8]), st.sampled_from([0.3, 0.5, 0.7]))
def test_modification_matches_oracle(seed, k, tau):
    labels, edit_ids = random_region_instance(np.random.default_rng(seed))
    part = partition_from_labels(labeling(labels), edit_ids)
    got = compute_edit_region(EditType.MODIFICATION, part, DIMS8, RegionParams(k, tau)).members
    asset, p_edit, pres = split_instance(labels, edit_ids)
    assert got == oracle_edit_region("modification", 8, asset, p_edit, pres, k, tau)


@given(st.integers(0, 2**31 - 1), st.sampled_from(list(EditType)))
def test_region_partition_properties(seed, edit_type):
    labels, edit_ids = random_region_instance(np.random.default_rng(seed))
    lab = labeling(labels)
    part = Partition.addition(lab.coords) if edit_type is EditType.ADDITION else partition_from_labels(lab, edit_ids)
    r = compute_edit_region(edit_type, part, DIMS8)
    pres = preserved_mask(r)
    assert (r | pres) == VoxelMask.full(DIMS8)
    assert len(r & pres) == 0
    asset = VoxelMask.from_coords(DIMS8, part.asset)
    edit = VoxelMask.from_coords(DIMS8, part.p_edit)
    kept = VoxelMask.from_coords(DIMS8, part.p_pres)
    if edit_type is EditType.DELETION:
        assert len(r - asset) == 0
    elif edit_type is EditType.ADDITION:
        assert len(r & asset) == 0
    else:
        assert len(edit - r) == 0
        if len(part.p_pres):
            assert len(r & kept) == 0


@given(st.integers(0, 2**31 - 1), st.sampled_from([2, 4, 8]))
def test_modification_antitone_in_tau(seed, k):
    labels, edit_ids = random_region_instance(np.random.default_rng(seed))
    part = partition_from_labels(labeling(labels), edit_ids)
    regions = [compute_edit_region(EditType.MODIFICATION, part, DIMS8, RegionParams(k, t)) for t in (0.2, 0.5, 0.8)]
    assert len(regions[1] - regions[0]) == 0
    assert len(regions[2] - regions[1]) == 0


@given(st.integers(0, 2**31 - 1))
def test_identity_relabeling_keeps_region(seed):
    rng = np.random.default_rng(seed)
    labels, edit_ids = random_region_instance(rng)
    perm = {p: p + 10 for p in set(labels.values())}
    renamed = labeling({c: perm[l] for c, l in labels.items()})
    a = compute_edit_region(EditType.MODIFICATION, partition_from_labels(labeling(labels), edit_ids), DIMS8)
    b = compute_edit_region(EditType.MODIFICATION, partition_from_labels(renamed, [perm[i] for i in edit_ids]), DIMS8)
    assert a == b


def test_preserved_mask_examples(rng):
    assert preserved_mask(VoxelMask.empty(DIMS8)) == VoxelMask.full(DIMS8)
    assert preserved_mask(VoxelMask.full(DIMS8)) == VoxelMask.empty(DIMS8)
    m = VoxelMask(DIMS8, rng.random(DIMS8.shape) < 0.4)
    assert preserved_mask(preserved_mask(m)) == m


def test_region_params_validation():
    with pytest.raises(ValueError):
        RegionParams(0, 0.5)
    with pytest.raises(ValueError):
        RegionParams(8, 1.0)
