"""Evaluation variants: unseen vocabulary, consistency sets, contrast sets.

The unseen transform rewrites surface words only (with span remapping), so
logical forms and gold labels are untouched. Consistency rewrites follow a
documented label map from the pivot; contrast edits are recomputed through
the answer engine and kept only when the gold actually changes.
"""

from __future__ import annotations

import random
import re
from dataclasses import replace
from typing import Callable, Optional

from .answers import UnresolvedMention, answer_logical_form
from .grammar import Grammar, SlotFill, Vocabulary, fill_template, render_descriptor
from .model import (
    CONVERSE,
    DK,
    AnswerSet,
    Descriptor,
    Fact,
    FR_LABELS,
    LogicalForm,
    Mention,
    NONE_LABEL,
    QType,
    Question,
    RelationSpan,
    Sentence,
    Span,
    Story,
    UnseenVariant,
    Variants,
    DatasetRecord,
    QuestionVariant,
    converse,
    excluded_with,
)
from .parsing import parse_question
from .questions import QUESTION_RELATIONS, StoryModel, find_similar_objects
from .sampler import derive_seed
from .serialize import record_to_dict


class NoVariant(RuntimeError):
    """No rewriting applies to this question."""


# --------------------------------------------------------------------------- #
# unseen vocabulary
# --------------------------------------------------------------------------- #

_VOWELS = "aeiou"


def _replacement_pairs(vfrom: Vocabulary, vto: Vocabulary) -> list[tuple[str, str]]:
    pairs: list[tuple[str, str]] = []
    for canon, old in vfrom.relations.items():
        new = vto.relations[canon]
        if old != new:
            pairs.append((old, new))
    for old_map, new_map, plural in (
        (vfrom.shapes, vto.shapes, True),
        (vfrom.colors, vto.colors, False),
        (vfrom.sizes, vto.sizes, False),
    ):
        for canon, old in old_map.items():
            new = new_map[canon]
            if old == new:
                continue
            if plural:
                pairs.append((old + "s", new + "s"))
            pairs.append((old, new))
    pairs.sort(key=lambda p: -len(p[0]))
    return pairs


def transform_text(text: str, pairs: list[tuple[str, str]]):
    """Replace surface phrases, fix a/an, and return a position remapper."""
    if not pairs:
        return text, lambda p: p
    regex = re.compile(
        "|".join(r"\b" + re.escape(old) + r"\b" for old, _ in pairs), re.IGNORECASE
    )
    lookup = {old.lower(): new for old, new in pairs}
    edits: list[tuple[int, int, str]] = []
    for m in regex.finditer(text):
        start, end = m.span()
        matched = m.group(0)
        new = lookup[matched.lower()]
        if matched[0].isupper():
            new = new[0].upper() + new[1:]
        article = re.search(r"\b([Aa]n?) $", text[:start])
        if article is not None:
            old_word = article.group(1)
            want = "an" if new[0].lower() in _VOWELS else "a"
            if old_word[0].isupper():
                want = want.capitalize()
            if want != old_word:
                start = article.start(1)
                new = f"{want} {new}"
        edits.append((start, end, new))

    out = []
    pos = 0
    shifts: list[tuple[int, int]] = []  # (original end, cumulative delta)
    delta = 0
    for start, end, new in edits:
        out.append(text[pos:start])
        out.append(new)
        delta += len(new) - (end - start)
        shifts.append((end, delta))
        pos = end
    out.append(text[pos:])
    new_text = "".join(out)

    def remap(p: int) -> int:
        d = 0
        for end, cum in shifts:
            if p >= end:
                d = cum
            else:
                break
        return p + d

    return new_text, remap


def _transform_sentence(sentence: Sentence, pairs) -> Sentence:
    new_text, remap = transform_text(sentence.text, pairs)

    def span(sp: Span) -> Span:
        return Span(remap(sp.start), remap(sp.end))

    return Sentence(
        text=new_text,
        fact_keys=sentence.fact_keys,
        relation_spans=tuple(
            RelationSpan(rs.fact_key, span(rs.trajector), span(rs.indicator), span(rs.landmark))
            for rs in sentence.relation_spans
        ),
        mentions=tuple(Mention(m.entity, span(m.span), m.definite) for m in sentence.mentions),
    )


def transform_story(story: Story, pairs) -> Story:
    return replace(story, sentences=tuple(_transform_sentence(s, pairs) for s in story.sentences))


def make_unseen(
    record: DatasetRecord,
    vocabulary_map: dict,
    fraction: float,
    seed: int,
    grammar: Grammar,
) -> DatasetRecord:
    """Surface-perturbed copy of a record; gold labels are untouched.

    A seeded coin decides independently for the story and for each question
    whether its text is rewritten; ``fraction`` = 1 rewrites everything.
    """
    from .grammar import apply_vocabulary_map

    rng = random.Random(derive_seed("unseen", seed))
    vto = apply_vocabulary_map(grammar.vocabulary, vocabulary_map)
    pairs = _replacement_pairs(grammar.vocabulary, vto)

    story = record.story
    story_changed = rng.random() < fraction
    if story_changed:
        story = transform_story(story, pairs)
    questions = []
    changed_q = 0
    for q in record.questions:
        if rng.random() < fraction:
            new_text, _ = transform_text(q.text, pairs)
            questions.append(replace(q, text=new_text))
            changed_q += 1
        else:
            questions.append(q)
    if story_changed and changed_q == len(questions):
        vocab_tag = "unseen"
    elif story_changed or changed_q:
        vocab_tag = "mixed"
    else:
        vocab_tag = record.provenance.vocabulary
    # sprl spans follow the transformed sentences
    sprl = record.sprl
    if story_changed:
        from .annotate import emit_sprl

        sprl = tuple(emit_sprl(story))
    return replace(
        record,
        story=story,
        questions=tuple(questions),
        sprl=sprl,
        provenance=replace(record.provenance, vocabulary=vocab_tag),
    )


# --------------------------------------------------------------------------- #
# consistency
# --------------------------------------------------------------------------- #

_FR_CONVERSE_LABEL = {
    "left": "right",
    "right": "left",
    "above": "below",
    "below": "above",
    "touching": "touching",
    "near to": "near to",
    "far from": "far from",
    DK: DK,
}


def _render_from_family(grammar: Grammar, family: str, lf: LogicalForm) -> str:
    """Deterministic re-rendering of a logical form via a family's first template."""
    vocab = grammar.vocabulary
    slots: dict[str, SlotFill] = {}
    if family == "FR":
        slots = {"np1": render_descriptor(lf.args[0], vocab), "np2": render_descriptor(lf.args[1], vocab)}
    elif family == "YN_plain":
        slots = {
            "np1": render_descriptor(lf.args[0], vocab),
            "rel": SlotFill(text=vocab.rel_phrase(lf.relation)),
            "np2": render_descriptor(lf.args[1], vocab),
        }
    elif family == "YN_any_all":
        slots = {
            "npp1": render_descriptor(lf.args[0], vocab, bare=True),
            "rel": SlotFill(text=vocab.rel_phrase(lf.relation)),
            "npp2": render_descriptor(lf.args[1], vocab, bare=True),
        }
    elif family in ("YN_any", "YN_all"):
        slots = {
            "npp1": render_descriptor(lf.args[0], vocab, bare=True),
            "rel": SlotFill(text=vocab.rel_phrase(lf.relation)),
            "np2": render_descriptor(lf.args[1], vocab),
        }
    elif family == "YN_the_all":
        slots = {
            "np1": render_descriptor(lf.args[0], vocab),
            "rel": SlotFill(text=vocab.rel_phrase(lf.relation)),
            "npp2": render_descriptor(lf.args[1], vocab, bare=True),
        }
    elif family in ("FB_pos", "FB_neg"):
        slots = {"np": render_descriptor(lf.args[0], vocab)}
    elif family in ("CO_which", "CO_what"):
        slots = {
            "rel": SlotFill(text=vocab.rel_phrase(lf.relation)),
            "np": render_descriptor(lf.args[0], vocab),
            "c1": render_descriptor(lf.args[1], vocab),
            "c2": render_descriptor(lf.args[2], vocab),
        }
    else:
        raise AssertionError(family)
    return fill_template(grammar.question_templates[family][0], slots).text


def _recompute(lf: LogicalForm, model: StoryModel) -> Optional[AnswerSet]:
    try:
        answer, _ = answer_logical_form(lf, model)
        return answer
    except UnresolvedMention:
        return None


def _degenerate(lf: LogicalForm, model: StoryModel) -> bool:
    """True when distinct mention slots collapse onto one object."""
    from .answers import resolve_unique

    try:
        if lf.qtype is QType.FR or (lf.qtype is QType.YN and lf.q1 is None and lf.q2 is None):
            a, _ = resolve_unique(lf.args[0], model)
            b, _ = resolve_unique(lf.args[1], model)
            return a == b
        if lf.qtype is QType.CO:
            ids = {resolve_unique(d, model)[0] for d in lf.args}
            return len(ids) < 3
    except UnresolvedMention:
        return True
    return False


def make_consistency(
    question: Question, gold: AnswerSet, model: StoryModel, grammar: Grammar
) -> list[tuple[Question, AnswerSet]]:
    """Rewrites asking for the same information; golds follow the label map."""
    _, family = parse_question(question.text, grammar)
    lf = question.logical_form
    out: list[tuple[Question, AnswerSet]] = []

    if question.qtype is QType.FR:
        swapped = replace(lf, args=(lf.args[1], lf.args[0]))
        mapped_labels = tuple(
            sorted(
                (_FR_CONVERSE_LABEL[label] for label in gold.labels),
                key=lambda l: (FR_LABELS + (DK,)).index(l),
            )
        )
        recomputed = _recompute(swapped, model)
        if recomputed is not None and recomputed.labels == mapped_labels:
            text = _render_from_family(grammar, family, swapped)
            out.append((replace(question, text=text, logical_form=swapped, gold=recomputed), recomputed))

    elif question.qtype is QType.YN and lf.q1 is None and lf.q2 is None:
        conv = converse(lf.relation)
        if conv is not None:
            swapped = replace(lf, args=(lf.args[1], lf.args[0]), relation=conv)
            recomputed = _recompute(swapped, model)
            if recomputed is not None and recomputed.labels == gold.labels:
                text = _render_from_family(grammar, family, swapped)
                out.append(
                    (replace(question, text=text, logical_form=swapped, gold=recomputed), recomputed)
                )

    elif question.qtype is QType.CO:
        swapped = replace(lf, args=(lf.args[0], lf.args[2], lf.args[1]))
        rename = {"object1": "object2", "object2": "object1"}
        mapped_labels = tuple(rename.get(label, label) for label in gold.labels)
        recomputed = _recompute(swapped, model)
        if recomputed is not None and recomputed.labels == mapped_labels:
            text = _render_from_family(grammar, family, swapped)
            out.append((replace(question, text=text, logical_form=swapped, gold=recomputed), recomputed))

    elif question.qtype is QType.FB:
        flipped = replace(lf, negated=not lf.negated)
        block_candidates = [c for c in question.candidates if c != NONE_LABEL]
        if gold.labels != (NONE_LABEL,):
            complement = tuple(b for b in block_candidates if b not in gold.labels)
            mapped_labels = complement if complement else (NONE_LABEL,)
            recomputed = _recompute(flipped, model)
            if recomputed is not None and recomputed.labels == mapped_labels:
                other_family = "FB_neg" if flipped.negated else "FB_pos"
                text = _render_from_family(grammar, other_family, flipped)
                out.append(
                    (replace(question, text=text, logical_form=flipped, gold=recomputed), recomputed)
                )

    if not out:
        raise NoVariant(f"no consistency rewriting applies to this {question.qtype.value} question")
    return out


# --------------------------------------------------------------------------- #
# contrast
# --------------------------------------------------------------------------- #


def _attribute_edits(d: Descriptor, model: StoryModel) -> list[Descriptor]:
    """Single attribute swaps drawing replacement values from the story."""
    edits = []
    colors = sorted({o.attrs.color.value for o in model.objects if o.attrs.color})
    sizes = sorted({o.attrs.size.value for o in model.objects if o.attrs.size})
    shapes = sorted({o.attrs.shape.value for o in model.objects})
    if d.ordinal is None:
        if d.color is not None:
            edits.extend(replace(d, color=c) for c in colors if c != d.color)
        if d.size is not None:
            edits.extend(replace(d, size=s) for s in sizes if s != d.size)
        if d.shape is not None:
            edits.extend(replace(d, shape=s) for s in shapes if s != d.shape)
    return edits


def _yn_family(lf: LogicalForm) -> str:
    if lf.q1 == "exists" and lf.q2 == "all":
        return "YN_any_all"
    if lf.q1 == "exists":
        return "YN_any"
    if lf.q1 == "all":
        return "YN_all"
    if lf.q2 == "all":
        return "YN_the_all"
    return "YN_plain"


def make_contrast(
    question: Question,
    gold: AnswerSet,
    model: StoryModel,
    grammar: Grammar,
) -> list[tuple[Question, AnswerSet]]:
    """Single edits whose recomputed gold differs from the pivot's."""
    lf = question.logical_form
    edits: list[tuple[str, LogicalForm]] = []

    if question.qtype is QType.YN:
        conv = converse(lf.relation)
        if conv is not None and conv is not lf.relation:
            edits.append((_yn_family(lf), replace(lf, relation=conv)))
        for other in sorted(excluded_with(lf.relation), key=lambda r: r.value):
            if other in QUESTION_RELATIONS:
                edits.append((_yn_family(lf), replace(lf, relation=other)))
        # determiner -> quantifier: "the black triangle" -> "all triangles"
        if lf.q1 is None and lf.q2 is None:
            d2 = lf.args[1]
            if d2.shape is not None:
                quantified = Descriptor(shape=d2.shape, plural=True, definite=False)
                edits.append(
                    ("YN_the_all", replace(lf, args=(lf.args[0], quantified), q2="all"))
                )
        for i, d in enumerate(lf.args):
            for edited in _attribute_edits(d, model):
                args = list(lf.args)
                args[i] = edited
                edits.append((_yn_family(lf), replace(lf, args=tuple(args))))

    elif question.qtype is QType.FR:
        for i in (0, 1):
            for edited in _attribute_edits(lf.args[i], model):
                args = list(lf.args)
                args[i] = edited
                edits.append(("FR", replace(lf, args=tuple(args))))

    elif question.qtype is QType.CO:
        _, family = parse_question(question.text, grammar)
        conv = converse(lf.relation)
        if conv is not None and conv is not lf.relation:
            edits.append((family, replace(lf, relation=conv)))
        for other in sorted(excluded_with(lf.relation), key=lambda r: r.value):
            if other in QUESTION_RELATIONS:
                edits.append((family, replace(lf, relation=other)))
        for edited in _attribute_edits(lf.args[0], model):
            edits.append((family, replace(lf, args=(edited, lf.args[1], lf.args[2]))))

    else:  # FB has no contrast set
        raise NoVariant("find-block questions have no contrast variant")

    out: list[tuple[Question, AnswerSet]] = []
    seen_texts = set()
    for family, edited in edits:
        if _degenerate(edited, model):
            continue
        recomputed = _recompute(edited, model)
        if recomputed is None or recomputed.labels == gold.labels:
            continue
        text = _render_from_family(grammar, family, edited)
        if text in seen_texts:
            continue
        seen_texts.add(text)
        out.append(
            (
                replace(question, text=text, logical_form=edited, gold=recomputed),
                recomputed,
            )
        )
    if not out:
        raise NoVariant("no answer-changing single edit exists")
    return out
