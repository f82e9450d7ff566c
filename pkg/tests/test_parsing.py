import pytest

from spatialqa.model import Attribute, Color, Fact, QType, RelationKind, Shape, Size
from spatialqa.parsing import (
    ParseError,
    canonical_facts,
    parse_question,
    parse_story,
    split_sentences,
)
from spatialqa.realizer import Universe, realize_story, universe_from_scene
from spatialqa.sampler import (
    SamplerConfig,
    extract_geometric_facts,
    sample_scene,
    select_story_facts,
)

R = RelationKind

FIG_STORY = (
    "A blue circle is above a big triangle. "
    "To the left of the big triangle, there is a square."
)


def test_sentence_splitting():
    assert split_sentences(FIG_STORY) == [
        "A blue circle is above a big triangle.",
        "To the left of the big triangle, there is a square.",
    ]


def test_parse_intro_by_relation_story(grammar):
    result = parse_story(FIG_STORY, grammar)
    assert len(result.objects) == 3
    assert result.blocks == []
    keys = {(f.subject, f.relation, f.object) for f in result.facts}
    by_shape = {o.attrs.shape: o.id for o in result.objects}
    circle, triangle, square = by_shape[Shape.CIRCLE], by_shape[Shape.TRIANGLE], by_shape[Shape.SQUARE]
    assert (circle, R.ABOVE, triangle) in keys
    assert (square, R.LEFT, triangle) in keys


def test_parse_resolves_pronoun_after_antecedent(grammar):
    text = "Block A has a circle. It is to the left of a medium yellow square."
    result = parse_story(text, grammar)
    circle = next(o for o in result.objects if o.attrs.shape is Shape.CIRCLE)
    square = next(o for o in result.objects if o.attrs.shape is Shape.SQUARE)
    assert Fact(circle.id, R.LEFT, square.id) in result.facts
    assert circle.block == "A"


def test_parse_out_of_grammar_sentence(grammar):
    with pytest.raises(ParseError) as err:
        parse_story("The cat sat.", grammar)
    assert err.value.sentence_index == 0
    assert "The cat sat." in err.value.residual


def test_parse_error_carries_sentence_index(grammar):
    with pytest.raises(ParseError) as err:
        parse_story("Block A has a circle. The moon is full.", grammar)
    assert err.value.sentence_index == 1


def test_parse_group_intro_assigns_ordinals(grammar):
    text = (
        "Block B has two medium yellow squares. "
        "The medium yellow square number one is to the left of the medium yellow square number two."
    )
    result = parse_story(text, grammar)
    ordinals = sorted(o.ordinal for o in result.objects)
    assert ordinals == [1, 2]
    assert len(result.facts) == 3  # two containments plus one relation


def test_parse_this_block_anaphora(grammar):
    text = "There is a block named A. One small yellow square is touching the bottom edge of this block."
    result = parse_story(text, grammar)
    assert result.blocks == ["A"]
    assert any(f.relation is R.TOUCHING_BOTTOM and f.object == "A" for f in result.facts)


def test_parse_nested_story_mention(grammar):
    text = (
        "Block A has a big square and a circle. "
        "The circle is to the right of the big square. "
        "The blue triangle is below the object which is to the right of the big square."
    )
    # the triangle is new: introduce it first
    text = (
        "Block A has a big square, a circle and a blue triangle. "
        "The circle is to the right of the big square. "
        "The blue triangle is below the object which is to the right of the big square."
    )
    result = parse_story(text, grammar)
    circle = next(o for o in result.objects if o.attrs.shape is Shape.CIRCLE)
    triangle = next(o for o in result.objects if o.attrs.shape is Shape.TRIANGLE)
    assert Fact(triangle.id, R.BELOW, circle.id) in result.facts


@pytest.mark.parametrize("seed", range(60))
def test_round_trip_over_sampled_stories(seed, grammar):
    cfg = SamplerConfig(seed=seed)
    scene = sample_scene(cfg)
    facts = extract_geometric_facts(scene, cfg)
    selected = select_story_facts(facts, cfg)
    story = realize_story(selected, universe_from_scene(scene), grammar, seed)
    parsed = parse_story(story.text, grammar)
    assert canonical_facts(list(story.facts), list(story.objects)) == canonical_facts(
        parsed.facts, parsed.objects
    )


def test_canonical_facts_identifies_converse_statements():
    a = Attribute(Shape.CIRCLE, Color.BLUE)
    b = Attribute(Shape.SQUARE)
    from spatialqa.model import ObjectInfo

    objs1 = [ObjectInfo("o1", a), ObjectInfo("o2", b)]
    objs2 = [ObjectInfo("e9", b), ObjectInfo("e3", a)]
    f1 = [Fact("o1", R.LEFT, "o2")]
    f2 = [Fact("e9", R.RIGHT, "e3")]
    assert canonical_facts(f1, objs1) == canonical_facts(f2, objs2)


def test_parse_question_fr(grammar):
    lf, family = parse_question(
        "What is the relation between the blue circle and the big triangle?", grammar
    )
    assert family == "FR" and lf.qtype is QType.FR
    assert lf.args[0].color == "blue" and lf.args[1].size == "big"


def test_parse_question_yn_quantified(grammar):
    lf, family = parse_question("Is there any circles below all triangles?", grammar)
    assert family == "YN_any_all"
    assert lf.q1 == "exists" and lf.q2 == "all"
    assert lf.relation is R.BELOW
    assert lf.args[0].plural and lf.args[1].plural


def test_parse_question_fb_negative_nested(grammar):
    lf, family = parse_question(
        "Which block doesn't have the circle which is above the black triangle?", grammar
    )
    assert family == "FB_neg" and lf.negated
    rel, inner = lf.args[0].rel_clause
    assert rel is R.ABOVE and inner.color == "black"


def test_parse_question_co(grammar):
    lf, family = parse_question(
        "Which object is above the black triangle? the blue circle or the yellow square?",
        grammar,
    )
    assert family == "CO_which"
    assert lf.relation is R.ABOVE
    assert lf.args[1].color == "blue" and lf.args[2].color == "yellow"


def test_parse_question_rejects_garbage(grammar):
    with pytest.raises(ParseError):
        parse_question("How many cats are there?", grammar)
