from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from voxedit.errors import BadPartCount, FixtureMiss, GuidanceSchemaFault, ProviderTimeout
from voxedit.flow import CondKind
from voxedit.guidance import (
    FixtureRecorder,
    Provider,
    ProviderConfig,
    ProviderMode,
    canonical_views,
    choose_granularity,
    embed_image,
    embed_text,
    heuristic_best_view,
    image_edit_key,
    kmeans_segmentation,
    multi_granularity_segment,
    parse_bundle,
    render_views,
    request_hash,
    request_image_edit,
    request_segmentation,
    request_text_guidance,
    select_best_view,
)
from voxedit.guidance.views import View, ViewSet
from voxedit.pipeline.run import selection_views
from voxedit.region import EditType

FIXTURES = Path(__file__).parent / "fixtures"
BUNDLE = {
    "original_description": "a ball",
    "target_part_names": ["top"],
    "edit_type": "modification",
    "new_complete_description": "a ball with a crown",
    "new_part_description": "a crown",
    "stage1_text": "a ball with a crown shape",
    "stage2_text": "a ball with a golden crown",
}


def fixture_provider(directory=FIXTURES, transport=None):
    return Provider(ProviderConfig(fixture_dir=directory), transport)


def no_network(url, payload, timeout):
    raise AssertionError("fixture mode must not touch the network")


# text guidance


def test_party_hat_fixture_replays():
    bundle = request_text_guidance(canonical_views(8), "Add a party hat", fixture_provider())
    assert bundle.edit_type is EditType.ADDITION
    assert bundle.target_part_names == ("seat",)
    assert "party hat" in bundle.stage2_text


def test_replay_is_deterministic_and_offline():
    p = fixture_provider(transport=no_network)
    a = request_text_guidance(canonical_views(8), "Add a party hat", p)
    b = request_text_guidance(canonical_views(8), "Add a party hat", p)
    assert a == b
    assert len(p.accessed) == 2


def test_malformed_fixture_raises_schema_fault():
    with pytest.raises(GuidanceSchemaFault, match="stage2_text"):
        request_text_guidance(canonical_views(8), "Make it weird", fixture_provider())


def test_missing_fixture_raises():
    with pytest.raises(FixtureMiss):
        request_text_guidance(canonical_views(8), "Paint it red", fixture_provider())
    with pytest.raises(ValueError):
        request_text_guidance(canonical_views(8), "  ", fixture_provider())


@pytest.mark.parametrize("change, match", [
    ({"edit_type": "recolor"}, "edit_type"),
    ({"target_part_names": "top"}, "target_part_names"),
    ({"stage1_text": ""}, "stage1_text"),
    ({"target_part_names": []}, "target_part_names"),
    ({"original_description": 3}, "original_description"),
])
def test_bundle_schema_faults(change, match):
    with pytest.raises(GuidanceSchemaFault, match=match):
        parse_bundle({**BUNDLE, **change})
    with pytest.raises(GuidanceSchemaFault):
        parse_bundle(["not", "an", "object"])


def test_deletion_may_leave_new_part_empty():
    b = parse_bundle({**BUNDLE, "edit_type": "deletion", "new_part_description": ""})
    assert b.edit_type is EditType.DELETION
    assert parse_bundle(b.to_json()) == b


def test_request_key_is_order_free():
    assert request_hash({"a": 1, "b": [1, 2]}) == request_hash({"b": [1, 2], "a": 1})
    assert request_hash({"a": 1}) != request_hash({"a": 2})


# live mode


def test_live_mode_posts_template_and_views():
    seen = []

    def transport(url, payload, timeout):
        seen.append((url, payload, timeout))
        return BUNDLE

    p = Provider(ProviderConfig(ProviderMode.LIVE, endpoint="http://x/y", timeout=2.0), transport)
    views = render_views([(1, 1, 1)], 4, canonical_views(8))
    bundle = request_text_guidance(views, "crown it", p)
    assert bundle.stage2_text == BUNDLE["stage2_text"]
    url, payload, timeout = seen[0]
    assert (url, timeout, payload["kind"], payload["prompt"]) == ("http://x/y", 2.0, "guidance", "crown it")
    assert len(payload["views"]) == 8 and payload["views"][0]["image_b64"]
    assert payload["extras"]["template"].strip()


def test_live_timeout_retries_then_raises():
    calls = []

    def slow(url, payload, timeout):
        calls.append(1)
        raise ProviderTimeout("slow")

    p = Provider(ProviderConfig(ProviderMode.LIVE, endpoint="http://x", retries=2), slow)
    with pytest.raises(ProviderTimeout):
        request_text_guidance(canonical_views(8), "crown it", p)
    assert len(calls) == 3


def test_live_retry_recovers():
    state = {"n": 0}

    def flaky(url, payload, timeout):
        state["n"] += 1
        if state["n"] == 1:
            raise ProviderTimeout("first try")
        return BUNDLE

    p = Provider(ProviderConfig(ProviderMode.LIVE, endpoint="http://x", retries=1), flaky)
    assert request_text_guidance(canonical_views(8), "crown it", p).edit_type is EditType.MODIFICATION


def test_config_from_env_precedence(tmp_path):
    env = {"VOXEDIT_PROVIDER_MODE": "live", "VOXEDIT_PROVIDER_ENDPOINT": "http://env",
           "VOXEDIT_PROVIDER_TIMEOUT": "5", "VOXEDIT_FIXTURE_DIR": str(tmp_path)}
    c = ProviderConfig.from_env(env)
    assert (c.mode, c.endpoint, c.timeout) == (ProviderMode.LIVE, "http://env", 5.0)
    c = ProviderConfig.from_env(env, mode="fixture", timeout=9.0, endpoint=None)
    assert (c.mode, c.endpoint, c.timeout) == (ProviderMode.FIXTURE, "http://env", 9.0)
    with pytest.raises(ValueError):
        ProviderConfig.from_env({})
    with pytest.raises(ValueError):
        ProviderConfig(ProviderMode.LIVE)


# views


def test_view_fixture_replay():
    p = fixture_provider(transport=no_network)
    bundle = parse_bundle({**BUNDLE, "target_part_names": ["seat"]})
    assert select_best_view(selection_views(), bundle, p, "Add a party hat") == 17


def test_single_view_short_circuits():
    views = ViewSet((View(5, 10.0, 0.0),))
    assert select_best_view(views, provider=fixture_provider(transport=no_network)) == 5
    with pytest.raises(ValueError):
        select_best_view(ViewSet(()))


def test_out_of_set_view_is_schema_fault(tmp_path):
    views = canonical_views(4)
    from voxedit.guidance.views import view_selection_key

    FixtureRecorder(tmp_path).record("view", view_selection_key(views, (), "p"), {"view_id": 9})
    with pytest.raises(GuidanceSchemaFault):
        select_best_view(views, None, fixture_provider(tmp_path), "p")


def test_heuristic_picks_face_toward_camera():
    r = 16
    cube = [(x, y, z) for x in range(4, 12) for y in range(4, 12) for z in range(4, 12)]
    face = [c for c in cube if c[0] == 11]
    views = selection_views()
    best = heuristic_best_view(views, cube, r, face)
    assert (views.get(best).azimuth, views.get(best).elevation) == (0.0, 0.0)
    back = [c for c in cube if c[0] == 4]
    assert views.get(heuristic_best_view(views, cube, r, back)).azimuth == 180.0


def test_render_is_deterministic_pgm():
    a = render_views([(0, 0, 0), (3, 3, 3)], 4, canonical_views(8))
    b = render_views([(0, 0, 0), (3, 3, 3)], 4, canonical_views(8))
    assert a == b
    assert all(v.payload.startswith(b"P5\n") for v in a.views)


# image guidance


def test_image_edit_replay_and_embedding(tmp_path):
    key = image_edit_key(b"src", "crown it", "a crown")
    FixtureRecorder(tmp_path).record_bytes("image", key, b"edited-bytes")
    g = request_image_edit(b"src", "crown it", "a crown", fixture_provider(tmp_path, no_network))
    assert g.payload == b"edited-bytes"
    assert g.condition.kind is CondKind.IMAGE
    assert g.condition == embed_image(b"edited-bytes")
    with pytest.raises(ValueError):
        request_image_edit(b"", "crown it", "a crown", fixture_provider(tmp_path))


@given(st.binary(min_size=1, max_size=64), st.binary(min_size=1, max_size=64))
def test_distinct_payloads_distinct_embeddings(a, b):
    if a != b:
        assert embed_image(a) != embed_image(b)
    else:
        assert embed_image(a) == embed_image(b)


def test_text_embedding_maps_shape_words():
    assert embed_text("a shiny ball").embedding.argmax() == 0
    assert embed_text("a wooden crate").embedding.argmax() == 1
    assert embed_text("a crown") == embed_text("a crown")
    assert embed_text("a crown") != embed_text("a hat")


# segmentation


def three_blobs(n=40, seed=0):
    rng = np.random.default_rng(seed)
    centers = np.array([[0.2, 0.2, 0.2], [0.8, 0.2, 0.5], [0.5, 0.8, 0.8]])
    truth = np.repeat(np.arange(3), n)
    return centers[truth] + 0.02 * rng.standard_normal((3 * n, 3)), truth


def test_three_blobs_give_pure_clusters():
    pts, truth = three_blobs()
    labels = request_segmentation(pts, 3, seed=1)
    for c in range(3):
        assert len(set(truth[labels == c])) == 1
    assert set(labels) == {0, 1, 2}


def test_segmentation_bounds():
    pts, _ = three_blobs()
    for bad in (2, 9):
        with pytest.raises(BadPartCount):
            request_segmentation(pts, bad)
    with pytest.raises(ValueError):
        request_segmentation(np.zeros((0, 3)), 3)
    with pytest.raises(BadPartCount):
        kmeans_segmentation(pts[:2], 3)


def test_six_granularities_and_fallback_rule():
    pts, _ = three_blobs()
    labelings = multi_granularity_segment(pts, seed=0)
    assert sorted(labelings) == [3, 4, 5, 6, 7, 8]
    for s, lab in labelings.items():
        assert lab.shape == (len(pts),) and lab.min() == 0 and lab.max() == s - 1
    degenerate = {3: np.array([0] * 50 + [1] * 49 + [2]), 4: np.repeat(np.arange(4), 25)}
    assert choose_granularity(degenerate) == 4
    assert choose_granularity({3: degenerate[3]}) == 3


@settings(max_examples=15)
@given(st.integers(0, 1000))
def test_segmentation_seed_deterministic(seed):
    pts, _ = three_blobs(seed=seed)
    assert np.array_equal(request_segmentation(pts, 5, seed=seed), request_segmentation(pts, 5, seed=seed))


def test_provider_segmentation_checks_labels(tmp_path):
    from voxedit.guidance import segmentation_key

    pts, truth = three_blobs(5)
    rec = FixtureRecorder(tmp_path)
    rec.record("parts", segmentation_key(pts, 3), {"labels": truth.tolist()})
    assert np.array_equal(request_segmentation(pts, 3, fixture_provider(tmp_path)), truth)
    rec.record("parts", segmentation_key(pts, 4), {"labels": [0, 1]})
    with pytest.raises(GuidanceSchemaFault):
        request_segmentation(pts, 4, fixture_provider(tmp_path))
