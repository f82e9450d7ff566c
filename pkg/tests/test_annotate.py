import pytest

from spatialqa.annotate import AlignmentMissing, build_scene_graph, emit_sprl
from spatialqa.model import (
    Attribute,
    Color,
    Fact,
    ObjectInfo,
    RelationKind,
    Sentence,
    Shape,
    Size,
    Story,
)
from spatialqa.parsing import parse_story
from spatialqa.realizer import Universe, realize_story

R = RelationKind


def test_scene_graph_from_two_sentence_story(grammar):
    # the two-sentence scenario yields three object nodes and two edges
    text = "A blue circle is above a big triangle. To the left of the big triangle, there is a square."
    parsed = parse_story(text, grammar)
    story = Story(
        sentences=(),
        facts=tuple(parsed.facts),
        blocks=tuple(parsed.blocks),
        objects=tuple(parsed.objects),
    )
    graph = build_scene_graph(story)
    assert len([n for n in graph.nodes if n.kind == "object"]) == 3
    assert len(graph.edges) == 2
    assert all(e.positive for e in graph.edges)


def test_scene_graph_attribute_only_story_has_no_edges():
    story = Story(
        sentences=(),
        facts=(),
        blocks=("A",),
        objects=(ObjectInfo("o1", Attribute(Shape.CIRCLE)),),
    )
    graph = build_scene_graph(story)
    assert graph.edges == ()
    assert {n.id for n in graph.nodes} == {"A", "o1"}


def test_scene_graph_edges_are_exactly_stated_facts(small_corpus):
    for rec in small_corpus[:6]:
        graph = build_scene_graph(rec.story)
        stated = {(f.subject, f.relation, f.object, f.positive) for f in rec.story.facts}
        edges = {(e.source, e.relation, e.target, e.positive) for e in graph.edges}
        assert edges == stated


def _story(facts, universe, grammar, seed=0):
    return realize_story(facts, universe, grammar, seed)


def test_sprl_simple_sentence_roles(grammar):
    facts = [
        Fact("o1", R.IN, "A"),
        Fact("o2", R.IN, "A"),
        Fact("o1", R.BELOW, "o2"),
    ]
    universe = Universe(
        objects={
            "o1": (Attribute(Shape.CIRCLE, Color.BLUE), "A"),
            "o2": (Attribute(Shape.SQUARE, size=Size.BIG), "A"),
        },
        blocks=("A",),
    )
    story = _story(facts, universe, grammar)
    triplets = emit_sprl(story)
    rel_triplets = [t for t in triplets if t.fact_key == Fact("o1", R.BELOW, "o2").key]
    assert len(rel_triplets) == 1
    t = rel_triplets[0]
    sentence = story.sentences[t.sentence_index].text
    assert t.indicator.slice(sentence) == "below"
    assert "circle" in t.trajector.slice(sentence) or "It" in t.trajector.slice(sentence)
    assert "square" in t.landmark.slice(sentence)


def test_sprl_relation_conjunction_shares_roles(grammar):
    facts = [
        Fact("o1", R.IN, "A"),
        Fact("o2", R.IN, "A"),
        Fact("o1", R.RIGHT, "o2"),
        Fact("o1", R.ABOVE, "o2"),
    ]
    universe = Universe(
        objects={
            "o1": (Attribute(Shape.SQUARE, Color.YELLOW), "A"),
            "o2": (Attribute(Shape.CIRCLE, Color.BLUE), "A"),
        },
        blocks=("A",),
    )
    for seed in range(60):
        story = _story(facts, universe, grammar, seed)
        for sentence in story.sentences:
            if len(sentence.relation_spans) == 2 and " and " in sentence.text:
                a, b = sentence.relation_spans
                if a.trajector == b.trajector and a.landmark == b.landmark:
                    assert a.indicator != b.indicator
                    return
    pytest.fail("no conjunction sentence sharing trajector and landmark")


def test_sprl_offsets_slice_to_annotated_phrases(small_corpus):
    for rec in small_corpus:
        for t in rec.sprl:
            sentence = rec.story.sentences[t.sentence_index].text
            for span in (t.trajector, t.indicator, t.landmark):
                phrase = span.slice(sentence)
                assert phrase == phrase.strip() and phrase


def test_sprl_indicator_lexicalizes_relation(grammar, small_corpus):
    vocab = grammar.vocabulary
    for rec in small_corpus:
        fact_by_key = {f.key: f for f in rec.story.facts}
        for t in rec.sprl:
            sentence = rec.story.sentences[t.sentence_index].text
            fact = fact_by_key[t.fact_key]
            indicator = t.indicator.slice(sentence)
            if fact.relation.value in vocab.relations:
                assert indicator == vocab.rel_phrase(fact.relation)
            elif fact.relation is R.IN:
                assert indicator.lower() in {"has", "contains", "in"}
            else:
                assert indicator == vocab.relations["touching"]


def test_attribute_only_sentences_have_no_triplets(small_corpus):
    for rec in small_corpus:
        for i, sentence in enumerate(rec.story.sentences):
            if not sentence.fact_keys:
                assert all(t.sentence_index != i for t in rec.sprl)


def test_alignment_missing_raised_for_stripped_story(small_corpus):
    rec = small_corpus[0]
    stripped = Story(
        sentences=tuple(
            Sentence(text=s.text, fact_keys=s.fact_keys, relation_spans=(), mentions=())
            for s in rec.story.sentences
        ),
        facts=rec.story.facts,
        blocks=rec.story.blocks,
        objects=rec.story.objects,
    )
    with pytest.raises(AlignmentMissing):
        emit_sprl(stripped)
