import random

import pytest

from spatialqa.answers import answer_question
from spatialqa.grammar import apply_vocabulary_map, load_vocabulary_map
from spatialqa.model import (
    Attribute,
    Color,
    Descriptor,
    Fact,
    LogicalForm,
    ObjectInfo,
    QType,
    Question,
    RelationKind,
    Shape,
    Size,
    Story,
)
from spatialqa.parsing import parse_story
from spatialqa.questions import StoryModel, make_question
from spatialqa.variants import (
    NoVariant,
    _replacement_pairs,
    make_consistency,
    make_contrast,
    make_unseen,
    transform_text,
)

R = RelationKind


@pytest.fixture(scope="module")
def pairs(grammar):
    vmap = load_vocabulary_map()
    return _replacement_pairs(grammar.vocabulary, apply_vocabulary_map(grammar.vocabulary, vmap))


def test_unseen_surface_rewrites(pairs):
    text, _ = transform_text("A blue circle is above a big triangle.", pairs)
    assert text == "A white oval is on top of a large diamond."
    text, _ = transform_text("Is the small square to the left of the yellow circle?", pairs)
    assert text == "Is the little rectangle to the left side of the green oval?"
    text, _ = transform_text("Block B has two medium yellow squares and a circle.", pairs)
    assert text == "Block B has two midsize green rectangles and an oval."


def test_unseen_preserves_untouched_words(pairs):
    text, _ = transform_text("Which block has a circle touching the left edge of Block A?", pairs)
    # the edge word "left" stays; only the shape moves
    assert text == "Which block has an oval touching the left edge of Block A?"


def test_transform_remaps_positions(pairs):
    text = "The circle is above the square."
    new_text, remap = transform_text(text, pairs)
    assert new_text == "The oval is on top of the rectangle."
    start = text.index("square")
    mapped = remap(start)
    assert new_text[mapped : mapped + len("rectangle")] == "rectangle"


def _record(grammar, seed=3):
    from spatialqa.pipeline import PipelineConfig, build_record

    return build_record(PipelineConfig(), grammar, "train", seed)


def test_make_unseen_preserves_gold_and_spans(grammar):
    vmap = load_vocabulary_map()
    record = _record(grammar)
    transformed = make_unseen(record, vmap, fraction=1.0, seed=11, grammar=grammar)
    assert transformed.provenance.vocabulary == "unseen"
    for q, uq in zip(record.questions, transformed.questions):
        assert q.gold.labels == uq.gold.labels
        assert q.logical_form == uq.logical_form
    for sentence in transformed.story.sentences:
        for m in sentence.mentions:
            text = m.span.slice(sentence.text)
            assert text and text == text.strip()
        for rs in sentence.relation_spans:
            assert rs.indicator.slice(sentence.text).strip()


def test_make_unseen_fraction_zero_is_identity(grammar):
    vmap = load_vocabulary_map()
    record = _record(grammar)
    unchanged = make_unseen(record, vmap, fraction=0.0, seed=1, grammar=grammar)
    assert unchanged.story.text == record.story.text
    assert [q.text for q in unchanged.questions] == [q.text for q in record.questions]
    assert unchanged.provenance.vocabulary == "seen"


def test_unseen_story_parses_with_mapped_grammar(grammar):
    from spatialqa.grammar import map_grammar
    from spatialqa.parsing import canonical_facts

    vmap = load_vocabulary_map()
    record = _record(grammar, seed=6)
    transformed = make_unseen(record, vmap, fraction=1.0, seed=2, grammar=grammar)
    unseen_grammar = map_grammar(grammar, vmap)
    parsed = parse_story(transformed.story.text, unseen_grammar)
    assert canonical_facts(parsed.facts, parsed.objects) == canonical_facts(
        list(record.story.facts), list(record.story.objects)
    )


# --------------------------------------------------------------------------- #
# consistency
# --------------------------------------------------------------------------- #


def _fig_model():
    objects = [
        ObjectInfo("o1", Attribute(Shape.CIRCLE, Color.BLUE)),
        ObjectInfo("o2", Attribute(Shape.TRIANGLE, size=Size.BIG)),
        ObjectInfo("o3", Attribute(Shape.SQUARE)),
    ]
    facts = [Fact("o1", R.ABOVE, "o2"), Fact("o3", R.LEFT, "o2")]
    story = Story(sentences=(), facts=tuple(facts), blocks=(), objects=tuple(objects))
    return StoryModel.from_story(story)


def _answered(question, model):
    return answer_question(question, model)


def test_consistency_fr_swap_maps_gold(grammar):
    model = _fig_model()
    lf = LogicalForm(
        QType.FR,
        args=(Descriptor(shape="circle", color="blue"), Descriptor(shape="triangle", size="big")),
    )
    q = _answered(
        Question(QType.FR, "What is the relation between the blue circle and the big triangle?",
                 lf, candidates=("left", "right", "below", "above", "touching", "far from", "near to")),
        model,
    )
    assert q.gold.labels == ("above",)
    items = make_consistency(q, q.gold, model, grammar)
    assert len(items) == 1
    variant, answer = items[0]
    assert answer.labels == ("below",)
    assert "between the big triangle and the blue circle" in variant.text


def test_consistency_yn_converse_keeps_gold(grammar):
    model = _fig_model()
    lf = LogicalForm(
        QType.YN,
        args=(Descriptor(shape="square"), Descriptor(shape="triangle", size="big")),
        relation=R.LEFT,
    )
    q = _answered(
        Question(QType.YN, "Is the square to the left of the big triangle?", lf,
                 candidates=("Yes", "No", "DK")),
        model,
    )
    assert q.gold.labels == ("Yes",)
    items = make_consistency(q, q.gold, model, grammar)
    variant, answer = items[0]
    assert answer.labels == ("Yes",)
    assert variant.logical_form.relation is R.RIGHT


def test_consistency_co_candidate_swap_renames_gold(grammar):
    model = _fig_model()
    lf = LogicalForm(
        QType.CO,
        args=(
            Descriptor(shape="triangle", size="big"),
            Descriptor(shape="circle", color="blue"),
            Descriptor(shape="square"),
        ),
        relation=R.ABOVE,
    )
    q = _answered(
        Question(QType.CO, "Which object is above the big triangle? the blue circle or the square?",
                 lf, candidates=("object1", "object2", "both", "none")),
        model,
    )
    assert q.gold.labels == ("object1",)
    variant, answer = make_consistency(q, q.gold, model, grammar)[0]
    assert answer.labels == ("object2",)


def test_consistency_fb_complement(grammar):
    objects = [
        ObjectInfo("o1", Attribute(Shape.CIRCLE, Color.BLUE), block="A"),
        ObjectInfo("o2", Attribute(Shape.SQUARE), block="B"),
    ]
    facts = [Fact("o1", R.IN, "A"), Fact("o2", R.IN, "B")]
    story = Story(sentences=(), facts=tuple(facts), blocks=("A", "B", "C"), objects=tuple(objects))
    model = StoryModel.from_story(story)
    lf = LogicalForm(QType.FB, args=(Descriptor(shape="circle", color="blue", definite=False),))
    q = _answered(
        Question(QType.FB, "Which block has a blue circle?", lf, candidates=("A", "B", "C", "none")),
        model,
    )
    assert q.gold.labels == ("A",)
    variant, answer = make_consistency(q, q.gold, model, grammar)[0]
    assert answer.labels == ("B", "C")
    assert variant.logical_form.negated


def test_consistency_quantified_yn_has_no_variant(grammar):
    model = _fig_model()
    lf = LogicalForm(
        QType.YN,
        args=(
            Descriptor(shape="circle", plural=True, definite=False),
            Descriptor(shape="triangle", plural=True, definite=False),
        ),
        relation=R.ABOVE,
        q1="exists",
        q2="all",
    )
    q = _answered(
        Question(QType.YN, "Is there any circles above all triangles?", lf, candidates=("Yes", "No", "DK")),
        model,
    )
    with pytest.raises(NoVariant):
        make_consistency(q, q.gold, model, grammar)


# --------------------------------------------------------------------------- #
# contrast
# --------------------------------------------------------------------------- #


def test_contrast_quantifier_edit_flips_answer(grammar):
    # circle above black triangle, but another triangle it is below
    objects = [
        ObjectInfo("o1", Attribute(Shape.CIRCLE, Color.BLUE)),
        ObjectInfo("o2", Attribute(Shape.TRIANGLE, Color.BLACK)),
        ObjectInfo("o3", Attribute(Shape.TRIANGLE, Color.YELLOW)),
    ]
    facts = [Fact("o1", R.BELOW, "o2"), Fact("o3", R.BELOW, "o1")]
    story = Story(sentences=(), facts=tuple(facts), blocks=(), objects=tuple(objects))
    model = StoryModel.from_story(story)
    lf = LogicalForm(
        QType.YN,
        args=(Descriptor(shape="circle", color="blue"), Descriptor(shape="triangle", color="black")),
        relation=R.BELOW,
    )
    q = _answered(
        Question(QType.YN, "Is the blue circle below the black triangle?", lf,
                 candidates=("Yes", "No", "DK")),
        model,
    )
    assert q.gold.labels == ("Yes",)
    items = make_contrast(q, q.gold, model, grammar)
    by_text = {v.text: a.labels for v, a in items}
    assert "Is the blue circle below all triangles?" in by_text
    assert by_text["Is the blue circle below all triangles?"] == ("No",)
    for _, answer in items:
        assert answer.labels != q.gold.labels


def test_contrast_relation_flip(grammar):
    model = _fig_model()
    lf = LogicalForm(
        QType.YN,
        args=(Descriptor(shape="circle", color="blue"), Descriptor(shape="triangle", size="big")),
        relation=R.ABOVE,
    )
    q = _answered(
        Question(QType.YN, "Is the blue circle above the big triangle?", lf,
                 candidates=("Yes", "No", "DK")),
        model,
    )
    items = make_contrast(q, q.gold, model, grammar)
    flips = [a.labels for v, a in items if v.logical_form.relation is R.BELOW]
    assert flips and flips[0] == ("No",)


def test_contrast_fb_raises_no_variant(grammar):
    model = _fig_model()
    lf = LogicalForm(QType.FB, args=(Descriptor(shape="circle", definite=False),))
    q = Question(QType.FB, "Which block has a circle?", lf, candidates=("none",))
    with pytest.raises(NoVariant):
        make_contrast(q, None, model, grammar)


def test_contrast_no_answer_changing_edit(grammar):
    # two attribute-free objects in different blocks with no relation at all:
    # every single edit keeps the answer DK
    objects = [
        ObjectInfo("o1", Attribute(Shape.CIRCLE), block="A"),
        ObjectInfo("o2", Attribute(Shape.TRIANGLE), block="B"),
    ]
    facts = [Fact("o1", R.IN, "A"), Fact("o2", R.IN, "B")]
    story = Story(sentences=(), facts=tuple(facts), blocks=("A", "B"), objects=tuple(objects))
    model = StoryModel.from_story(story)
    lf = LogicalForm(
        QType.YN,
        args=(Descriptor(shape="circle"), Descriptor(shape="triangle")),
        relation=R.ABOVE,
    )
    q = _answered(
        Question(QType.YN, "Is the circle above the triangle?", lf, candidates=("Yes", "No", "DK")),
        model,
    )
    assert q.gold.labels == ("DK",)
    with pytest.raises(NoVariant):
        make_contrast(q, q.gold, model, grammar)


def test_contrast_texts_parse_back(grammar, small_corpus):
    from spatialqa.parsing import parse_question

    for rec in small_corpus[:4]:
        model = StoryModel.from_story(rec.story)
        for q in rec.questions:
            try:
                items = make_contrast(q, q.gold, model, grammar)
            except NoVariant:
                continue
            for variant, _ in items:
                lf, _family = parse_question(variant.text, grammar)
                assert lf.qtype is q.qtype
