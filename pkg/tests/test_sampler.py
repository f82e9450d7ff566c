import io
import json

import pytest

from spatialqa.algebra import closure
from spatialqa.model import Fact, RelationKind, validate_scene
from spatialqa.sampler import (
    SamplerConfig,
    derive_seed,
    export_scene,
    extract_geometric_facts,
    import_scene,
    sample_scene,
    select_story_facts,
)
from spatialqa.serialize import SchemaError

R = RelationKind


def test_same_seed_same_scene():
    cfg = SamplerConfig(seed=7)
    s1 = sample_scene(cfg)
    s2 = sample_scene(cfg)
    assert export_scene(s1) == export_scene(s2)


def test_different_seed_different_scene():
    assert export_scene(sample_scene(SamplerConfig(seed=1))) != export_scene(
        sample_scene(SamplerConfig(seed=2))
    )


def test_three_block_scene_names():
    cfg = SamplerConfig(block_count=(3, 3), seed=11)
    scene = sample_scene(cfg)
    assert [b.name for b in scene.blocks] == ["A", "B", "C"]


def test_forced_cardinality():
    cfg = SamplerConfig(block_count=(2, 2), objects_per_block=(1, 1), seed=3)
    scene = sample_scene(cfg)
    assert len(scene.objects) == 2


@pytest.mark.parametrize("seed", range(40))
def test_sampled_scenes_validate(seed):
    scene = sample_scene(SamplerConfig(seed=seed))
    assert validate_scene(scene) == []


def test_one_block_relation_per_pair():
    scene = sample_scene(SamplerConfig(block_count=(3, 3), seed=5))
    pairs = {frozenset({f.subject, f.object}) for f in scene.block_relations}
    assert len(pairs) == len(scene.block_relations) == 3


def test_extract_directional_threshold():
    cfg = SamplerConfig(seed=0)
    scene = sample_scene(SamplerConfig(block_count=(1, 1), objects_per_block=(2, 2), seed=4))
    # construct a deterministic pair instead: rebuild positions
    from spatialqa.model import Attribute, Block, Scene, Shape, SpatialObject

    a = SpatialObject("o1", Attribute(Shape.CIRCLE), "A", (0.2, 0.5), 0.1)
    b = SpatialObject("o2", Attribute(Shape.SQUARE), "A", (0.8, 0.5), 0.1)
    scene = Scene((Block("A", (1.0, 1.0), (0.0, 0.0), ("o1", "o2")),), (a, b))
    facts = {f.key for f in extract_geometric_facts(scene, cfg)}
    assert Fact("o1", R.LEFT, "o2").key in facts
    assert Fact("o2", R.RIGHT, "o1").key in facts
    assert Fact("o1", R.ABOVE, "o2").key not in facts
    assert Fact("o2", R.ABOVE, "o1").key not in facts


def test_extract_threshold_gap_emits_neither_near_nor_far():
    from spatialqa.model import Attribute, Block, Scene, Shape, SpatialObject

    cfg = SamplerConfig(seed=0)  # near <= 0.3, far >= 0.65
    a = SpatialObject("o1", Attribute(Shape.CIRCLE), "A", (0.25, 0.5), 0.1)
    b = SpatialObject("o2", Attribute(Shape.SQUARE), "A", (0.75, 0.5), 0.1)
    scene = Scene((Block("A", (1.0, 1.0), (0.0, 0.0), ("o1", "o2")),), (a, b))
    kinds = {f.relation for f in extract_geometric_facts(scene, cfg)}
    assert R.NEAR not in kinds and R.FAR not in kinds


def test_extract_edge_tangency():
    from spatialqa.model import Attribute, Block, Scene, Shape, SpatialObject

    cfg = SamplerConfig(seed=0)
    obj = SpatialObject("o1", Attribute(Shape.SQUARE), "A", (0.5, 0.1), 0.1)
    scene = Scene((Block("A", (1.0, 1.0), (0.0, 0.0), ("o1",)),), (obj,))
    facts = {f.key for f in extract_geometric_facts(scene, cfg)}
    assert Fact("o1", R.TOUCHING_BOTTOM, "A").key in facts
    assert Fact("o1", R.TOUCHING_TOP, "A").key not in facts


@pytest.mark.parametrize("seed", range(40))
def test_extract_never_emits_mutually_exclusive_pair(seed):
    from spatialqa.model import excluded_with

    cfg = SamplerConfig(seed=seed)
    scene = sample_scene(cfg)
    by_pair: dict[tuple[str, str], set[RelationKind]] = {}
    for f in extract_geometric_facts(scene, cfg):
        if f.positive:
            by_pair.setdefault((f.subject, f.object), set()).add(f.relation)
    for rels in by_pair.values():
        for rel in rels:
            assert not (excluded_with(rel) & rels)


@pytest.mark.parametrize("seed", range(40))
def test_extracted_facts_are_geometry_faithful(seed):
    cfg = SamplerConfig(seed=seed)
    scene = sample_scene(cfg)
    for f in extract_geometric_facts(scene, cfg):
        if f.relation in (R.LEFT, R.RIGHT, R.ABOVE, R.BELOW) and not f.subject.isupper():
            ax, ay = scene.global_position(f.subject)
            bx, by = scene.global_position(f.object)
            if f.relation is R.LEFT:
                assert ax < bx
            elif f.relation is R.RIGHT:
                assert ax > bx
            elif f.relation is R.ABOVE:
                assert ay > by
            else:
                assert ay < by


def test_select_identity_at_full_fraction():
    cfg = SamplerConfig(seed=9, describe_fraction=1.0)
    scene = sample_scene(cfg)
    facts = extract_geometric_facts(scene, cfg)
    assert select_story_facts(facts, cfg) == facts


def test_select_is_deterministic():
    cfg = SamplerConfig(seed=9, describe_fraction=0.8)
    scene = sample_scene(cfg)
    facts = extract_geometric_facts(scene, cfg)
    assert select_story_facts(facts, cfg) == select_story_facts(facts, cfg)


@pytest.mark.parametrize("seed", range(60))
def test_selected_subset_is_consistent_and_anchored(seed):
    cfg = SamplerConfig(seed=seed, describe_fraction=0.8)
    scene = sample_scene(cfg)
    facts = extract_geometric_facts(scene, cfg)
    subset = select_story_facts(facts, cfg)
    keys = {f.key for f in subset}
    assert keys <= {f.key for f in facts}
    # never Left and Right stated for one ordered pair: closure must not raise
    entailed = closure(subset)
    # every described object keeps its containment anchor
    objects = {f.subject for f in subset if not f.subject.isupper()}
    anchored = {f.subject for f in subset if f.relation is R.IN}
    assert objects <= anchored | {f.object for f in subset if not f.object.isupper()}
    for f in subset:
        if f.relation is R.IN:
            assert entailed.has(f.subject, R.IN, f.object)


def test_import_round_trip(tmp_path):
    scene = sample_scene(SamplerConfig(seed=21))
    path = tmp_path / "scene.json"
    path.write_text(json.dumps(export_scene(scene)))
    again = import_scene(path)
    assert export_scene(again) == export_scene(scene)


def test_import_accepts_stream_and_dict():
    scene = sample_scene(SamplerConfig(seed=22))
    data = export_scene(scene)
    assert export_scene(import_scene(data)) == data
    assert export_scene(import_scene(io.StringIO(json.dumps(data)))) == data


def test_import_missing_position_names_field():
    data = export_scene(sample_scene(SamplerConfig(seed=23)))
    del data["objects"][0]["position"]
    with pytest.raises(SchemaError) as err:
        import_scene(data)
    assert "objects[0].position" in str(err.value)


def test_import_rejects_invalid_geometry():
    data = export_scene(sample_scene(SamplerConfig(seed=24)))
    data["objects"][0]["position"] = [5.0, 5.0]
    with pytest.raises(SchemaError):
        import_scene(data)


def test_derive_seed_is_stable():
    assert derive_seed("scene", 7) == derive_seed("scene", 7)
    assert derive_seed("scene", 7) != derive_seed("scene", 8)
    assert derive_seed("scene", 7) != derive_seed("select", 7)
