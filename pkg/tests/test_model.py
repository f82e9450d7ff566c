import pytest

from spatialqa.model import (
    CONVERSE,
    MUTEX,
    TRANSITIVE,
    Attribute,
    Block,
    Color,
    Fact,
    RelationKind,
    Scene,
    Shape,
    Size,
    SpatialObject,
    converse,
    tokenize,
    validate_scene,
)

R = RelationKind


def test_converse_is_an_involution():
    for rel, conv in CONVERSE.items():
        assert CONVERSE[conv] is rel


def test_mutex_is_symmetric():
    for rel, excluded in MUTEX.items():
        for other in excluded:
            assert rel in MUTEX[other]


def test_transitive_kinds_are_exactly_the_directional_ones():
    assert TRANSITIVE == {R.LEFT, R.RIGHT, R.ABOVE, R.BELOW}


def test_in_and_edge_kinds_have_no_converse():
    assert converse(R.IN) is None
    assert converse(R.TOUCHING_TOP) is None


def test_fact_rejects_self_relation():
    with pytest.raises(ValueError):
        Fact("o1", R.LEFT, "o1")


def test_fact_rejects_negative_non_containment():
    with pytest.raises(ValueError):
        Fact("o1", R.LEFT, "o2", positive=False)
    Fact("o1", R.IN, "B", positive=False)  # fine


def test_fact_normalization_flips_to_smaller_subject():
    f = Fact("o2", R.LEFT, "o1")
    assert f.normalized() == Fact("o1", R.RIGHT, "o2")
    assert Fact("o1", R.ABOVE, "o2").normalized() == Fact("o1", R.ABOVE, "o2")
    assert Fact("o2", R.TOUCHING, "o1").normalized() == Fact("o1", R.TOUCHING, "o2")


def _well_formed_scene() -> Scene:
    a = Block("A", (1.0, 1.0), (0.0, 0.0), ("o1", "o2"))
    b = Block("B", (1.0, 1.0), (1.2, 0.0), ("o3",))
    c = Block("C", (1.0, 1.0), (0.0, 1.2), ())
    objs = (
        SpatialObject("o1", Attribute(Shape.CIRCLE, Color.BLUE), "A", (0.3, 0.5), 0.1),
        SpatialObject("o2", Attribute(Shape.TRIANGLE, size=Size.BIG), "A", (0.7, 0.5), 0.14),
        SpatialObject("o3", Attribute(Shape.SQUARE), "B", (0.5, 0.5), 0.1),
    )
    rels = (Fact("A", R.LEFT, "B"), Fact("C", R.ABOVE, "A"), Fact("C", R.ABOVE, "B"))
    return Scene(blocks=(a, b, c), objects=objs, block_relations=rels)


def test_validate_scene_accepts_well_formed_scene():
    assert validate_scene(_well_formed_scene()) == []


def test_validate_scene_flags_extent_crossing_border():
    scene = _well_formed_scene()
    bad = SpatialObject("o4", Attribute(Shape.SQUARE), "B", (0.95, 0.5), 0.1)
    scene = Scene(
        blocks=tuple(
            b if b.name != "B" else Block("B", b.bounds, b.origin, b.objects + ("o4",))
            for b in scene.blocks
        ),
        objects=scene.objects + (bad,),
        block_relations=scene.block_relations,
    )
    violations = validate_scene(scene)
    assert len(violations) == 1
    assert "extent" in violations[0]


def test_validate_scene_flags_duplicate_block_name():
    scene = _well_formed_scene()
    dup = Scene(
        blocks=scene.blocks + (Block("A", (1.0, 1.0), (1.2, 1.2)),),
        objects=scene.objects,
        block_relations=scene.block_relations,
    )
    violations = validate_scene(dup)
    assert any("duplicate block names" in v for v in violations)


def test_validate_scene_flags_block_relation_geometry_mismatch():
    scene = _well_formed_scene()
    bad = Scene(scene.blocks, scene.objects, (Fact("B", R.LEFT, "A"),))
    assert any("disagrees" in v for v in validate_scene(bad))


def test_tokenizer_splits_words_and_punctuation():
    assert tokenize("Block A has a circle.") == ["Block", "A", "has", "a", "circle", "."]
    assert tokenize("Which block doesn't have a square?") == [
        "which".capitalize(), "block", "doesn't", "have", "a", "square", "?",
    ]


def test_attribute_signature_groups_identical_objects():
    a = Attribute(Shape.SQUARE, Color.YELLOW, Size.MEDIUM)
    b = Attribute(Shape.SQUARE, Color.YELLOW, Size.MEDIUM)
    c = Attribute(Shape.SQUARE, Color.YELLOW)
    assert a.signature() == b.signature()
    assert a.signature() != c.signature()
