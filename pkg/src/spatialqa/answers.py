"""Gold answer computation under open-world three-valued semantics.

Answers come from the story model (stated facts plus closure), never from
scene geometry. Yes/no questions evaluate their quantified formula with
strong-Kleene connectives; unknown truth surfaces as the DK label. Every
answer carries a justification: the entailed facts that decided it, with
their derivation depths.
"""

from __future__ import annotations

from typing import Optional

from .algebra import Truth, relation_status, status_evidence
from .model import (
    DK,
    Descriptor,
    Fact,
    FR_LABELS,
    AnswerSet,
    Justification,
    LogicalForm,
    NONE_LABEL,
    QType,
    Question,
    RelationKind,
)
from .questions import QUESTION_RELATIONS, StoryModel, find_similar_objects

R = RelationKind


class UnresolvedMention(ValueError):
    """A definite mention matched zero or several story objects."""


def resolve_unique(d: Descriptor, model: StoryModel) -> tuple[str, list[Fact]]:
    """Resolve a singular mention; returns the entity and clause-support facts."""
    hits = find_similar_objects(d, model)
    if len(hits) != 1:
        raise UnresolvedMention(f"mention matches {len(hits)} objects, expected exactly 1")
    target = hits[0]
    support: list[Fact] = []
    if d.rel_clause is not None:
        rel, inner = d.rel_clause
        for anchor in find_similar_objects(inner, model):
            if anchor != target and relation_status(target, anchor, rel, model.entailed) is Truth.TRUE:
                support.append(Fact(target, rel, anchor))
                break
    return target, support


def _justify(model: StoryModel, facts: list[Fact]) -> tuple[Justification, ...]:
    out = []
    seen = set()
    for f in facts:
        if f.key in seen:
            continue
        seen.add(f.key)
        depth = model.entailed.depth_of(f)
        out.append(Justification(fact=f, depth=depth if depth is not None else 0))
    return tuple(out)


def _depth_of(just: tuple[Justification, ...]) -> int:
    return max((j.depth for j in just), default=0)


def answer_fr(lf: LogicalForm, model: StoryModel) -> tuple[AnswerSet, int]:
    d1, d2 = lf.args
    a, support1 = resolve_unique(d1, model)
    b, support2 = resolve_unique(d2, model)
    held = model.entailed.relations(a, b)
    labels = tuple(label for label in FR_LABELS if RelationKind(label) in held)
    evidence = [Fact(a, RelationKind(label), b) for label in labels]
    just = _justify(model, evidence + support1 + support2)
    if not labels:
        return AnswerSet(labels=(DK,), justification=just), _depth_of(just)
    return AnswerSet(labels=labels, justification=just), _depth_of(just)


def _status_with_evidence(model: StoryModel, a: str, rel: RelationKind, b: str):
    status = relation_status(a, b, rel, model.entailed)
    return status, status_evidence(a, b, rel, model.entailed)


def _exists(values):
    """Kleene exists over (truth, facts) pairs, keeping deciding evidence."""
    unknown = False
    refuting: list[Fact] = []
    for truth, facts in values:
        if truth is Truth.TRUE:
            return Truth.TRUE, facts
        if truth is Truth.UNKNOWN:
            unknown = True
        else:
            refuting.extend(facts)
    if unknown:
        return Truth.UNKNOWN, []
    return Truth.FALSE, refuting


def _forall(values):
    unknown = False
    witnessing: list[Fact] = []
    for truth, facts in values:
        if truth is Truth.FALSE:
            return Truth.FALSE, facts
        if truth is Truth.UNKNOWN:
            unknown = True
        else:
            witnessing.extend(facts)
    if unknown:
        return Truth.UNKNOWN, []
    return Truth.TRUE, witnessing


def answer_yn(lf: LogicalForm, model: StoryModel) -> tuple[AnswerSet, int]:
    rel = lf.relation
    assert rel is not None
    d1, d2 = lf.args
    support: list[Fact] = []
    vacuous = False

    if lf.q1 is None:
        a, s1 = resolve_unique(d1, model)
        left: list[str] = [a]
        support.extend(s1)
    else:
        left = find_similar_objects(d1, model)
    if lf.q2 is None:
        b, s2 = resolve_unique(d2, model)
        right: list[str] = [b]
        support.extend(s2)
    else:
        right = find_similar_objects(d2, model)

    def pair_values(x: str):
        values = []
        for y in right:
            if x == y:
                continue
            values.append(_status_with_evidence(model, x, rel, y))
        return values

    def eval_right(x: str):
        values = pair_values(x)
        if lf.q2 == "all":
            nonlocal vacuous
            if not values:
                vacuous = True
            return _forall(values)
        if lf.q2 == "exists":
            return _exists(values)
        if not values:
            return Truth.FALSE, []
        return values[0]

    rows = [eval_right(x) for x in left]
    if lf.q1 == "all":
        if not rows:
            vacuous = True
        truth, evidence = _forall(rows)
    elif lf.q1 == "exists":
        truth, evidence = _exists(rows)
    else:
        truth, evidence = rows[0] if rows else (Truth.FALSE, [])

    label = {"true": "Yes", "false": "No", "unknown": DK}[truth.value]
    just = _justify(model, evidence + support)
    return AnswerSet(labels=(label,), justification=just, vacuous=vacuous), _depth_of(just)


def answer_fb(lf: LogicalForm, model: StoryModel) -> tuple[AnswerSet, int]:
    (d,) = lf.args
    support: list[Fact] = []
    if d.definite and not d.plural:
        target, support = resolve_unique(d, model)
        matches = [target]
    else:
        matches = find_similar_objects(d, model)
    vacuous = False
    evidence: list[Fact] = []
    labels: list[str] = []
    if not lf.negated:
        for block in model.blocks:
            holders = [m for m in matches if model.entailed.has(m, R.IN, block)]
            if holders:
                labels.append(block)
                evidence.append(Fact(holders[0], R.IN, block))
    else:
        if not matches:
            vacuous = True
            labels = list(model.blocks)
        for block in model.blocks:
            statuses = [relation_status(m, block, R.IN, model.entailed) for m in matches]
            if matches and all(s is Truth.FALSE for s in statuses):
                labels.append(block)
                evidence.extend(Fact(m, R.IN, block, positive=False) for m in matches)
    if not labels:
        labels = [NONE_LABEL]
    just = _justify(model, evidence + support)
    return AnswerSet(labels=tuple(labels), justification=just, vacuous=vacuous), _depth_of(just)


def answer_co(lf: LogicalForm, model: StoryModel) -> tuple[AnswerSet, int]:
    rel = lf.relation
    assert rel is not None
    anchor_d, c1_d, c2_d = lf.args
    anchor, s0 = resolve_unique(anchor_d, model)
    c1, s1 = resolve_unique(c1_d, model)
    c2, s2 = resolve_unique(c2_d, model)
    t1, e1 = _status_with_evidence(model, c1, rel, anchor)
    t2, e2 = _status_with_evidence(model, c2, rel, anchor)
    if t1 is Truth.TRUE and t2 is Truth.TRUE:
        label, evidence = "both", e1 + e2
    elif t1 is Truth.TRUE:
        label, evidence = "object1", e1
    elif t2 is Truth.TRUE:
        label, evidence = "object2", e2
    else:
        label, evidence = NONE_LABEL, e1 + e2
    just = _justify(model, evidence + s0 + s1 + s2)
    return AnswerSet(labels=(label,), justification=just), _depth_of(just)


def answer_logical_form(lf: LogicalForm, model: StoryModel) -> tuple[AnswerSet, int]:
    if lf.qtype is QType.FR:
        return answer_fr(lf, model)
    if lf.qtype is QType.YN:
        return answer_yn(lf, model)
    if lf.qtype is QType.FB:
        return answer_fb(lf, model)
    if lf.qtype is QType.CO:
        return answer_co(lf, model)
    raise ValueError(lf.qtype)


def answer_question(question: Question, model: StoryModel) -> Question:
    """Fill gold and reasoning depth; returns a new Question."""
    from dataclasses import replace

    gold, depth = answer_logical_form(question.logical_form, model)
    return replace(question, gold=gold, reasoning_depth=depth)
