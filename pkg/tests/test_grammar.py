import pytest

from spatialqa.grammar import (
    Grammar,
    SlotFill,
    apply_vocabulary_map,
    compile_template,
    fill_template,
    indefinite_article,
    load_grammar,
    load_vocabulary_map,
    render_descriptor,
    validate_grammar,
)
from spatialqa.model import Descriptor, RelationKind, Span


def test_default_grammar_is_valid(grammar):
    assert validate_grammar(grammar) == []


def test_orphan_family_is_flagged(grammar):
    broken = Grammar(
        vocabulary=grammar.vocabulary,
        templates={**grammar.templates, "mystery": (compile_template("Nothing {x}."),)},
        question_templates=grammar.question_templates,
    )
    violations = validate_grammar(broken)
    assert any("mystery" in v and "not reachable" in v for v in violations)


def test_unknown_lexicon_color_is_flagged(grammar):
    vocab = apply_vocabulary_map(grammar.vocabulary, {})
    vocab = type(vocab)(
        shapes=vocab.shapes,
        colors={**vocab.colors, "purple": "purple"},
        sizes=vocab.sizes,
        hypernyms=vocab.hypernyms,
        relations=vocab.relations,
        edges=vocab.edges,
        numbers=vocab.numbers,
    )
    broken = Grammar(vocab, grammar.templates, grammar.question_templates)
    violations = validate_grammar(broken)
    assert violations == ["color 'purple' is not in the vocabulary"]


def test_missing_family_is_flagged(grammar):
    templates = dict(grammar.templates)
    del templates["obj_rel"]
    broken = Grammar(grammar.vocabulary, templates, grammar.question_templates)
    assert any("obj_rel" in v and "missing" in v for v in validate_grammar(broken))


def test_template_fill_tracks_slot_spans():
    tpl = compile_template("Block {b} has {groups}.")
    filled = fill_template(
        tpl, {"b": SlotFill(text="A"), "groups": SlotFill(text="a circle")}
    )
    assert filled.text == "Block A has a circle."
    assert filled.text[filled.slot_spans["groups"].start : filled.slot_spans["groups"].end] == "a circle"


def test_template_fill_capitalizes_sentence_start():
    tpl = compile_template("{subj} {be} big.")
    filled = fill_template(tpl, {"subj": SlotFill(text="the circle"), "be": SlotFill(text="is")})
    assert filled.text == "The circle is big."


def test_indefinite_article_choice():
    assert indefinite_article("object") == "an"
    assert indefinite_article("circle") == "a"


def test_render_descriptor_surface_forms(grammar):
    v = grammar.vocabulary
    d = Descriptor(shape="square", color="yellow", size="medium", definite=False)
    assert render_descriptor(d, v).text == "a medium yellow square"
    d = Descriptor(shape="square", color="yellow", ordinal=2, definite=True)
    assert render_descriptor(d, v).text == "the yellow square number two"
    d = Descriptor(hypernym="object", color="black", definite=True)
    assert render_descriptor(d, v).text == "the black object"
    d = Descriptor(shape="circle", plural=True, count=2, definite=False)
    assert render_descriptor(d, v).text == "two circles"
    d = Descriptor(shape="circle", plural=True, count=2, definite=True)
    assert render_descriptor(d, v).text == "the two circles"
    d = Descriptor(hypernym="object", definite=False)
    assert render_descriptor(d, v).text == "an object"


def test_render_nested_descriptor_marks_clause(grammar):
    inner = Descriptor(shape="triangle", color="black", definite=True)
    d = Descriptor(shape="circle", definite=True, rel_clause=(RelationKind.ABOVE, inner))
    fill = render_descriptor(d, grammar.vocabulary)
    assert fill.text == "the circle which is above the black triangle"
    (rel, span), = fill.marks["clause_rel"]
    assert rel is RelationKind.ABOVE
    assert fill.text[span.start : span.end] == "above"


def test_vocabulary_map_swaps_surfaces(grammar):
    vmap = load_vocabulary_map()
    mapped = apply_vocabulary_map(grammar.vocabulary, vmap)
    assert mapped.shapes["circle"] == "oval"
    assert mapped.colors["blue"] == "white"
    assert mapped.sizes["big"] == "large"
    assert mapped.relations["above"] == "on top of"
    # canonical keys unchanged; bijection on each section
    assert set(mapped.shapes) == set(grammar.vocabulary.shapes)
    assert len(set(mapped.shapes.values())) == len(mapped.shapes)
    d = Descriptor(shape="circle", color="blue", definite=False)
    assert render_descriptor(d, mapped).text == "a white oval"
