"""Question construction over a story's entailment model.

Everything here operates on the story-described data only (never the raw
scene geometry): objects with their stated attributes and group numbers, the
stated facts, and their closure. The same model is reconstructable from
parsed text, which is what keeps the text-level solver in agreement with
generation-time answers.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field, replace
from typing import Optional

from .algebra import EntailedSet, Truth, closure, relation_status
from .grammar import Grammar, SlotFill, render_descriptor
from .model import (
    CO_LABELS,
    Descriptor,
    Fact,
    FR_LABELS,
    LogicalForm,
    NONE_LABEL,
    ObjectInfo,
    QType,
    Question,
    RelationKind,
    Story,
    YN_LABELS,
    attr_constraints_match,
)

R = RelationKind

#: Kinds a question may ask about, in candidate-list order.
QUESTION_RELATIONS = tuple(RelationKind(v) for v in FR_LABELS)


class NoValidSelection(RuntimeError):
    """The story cannot satisfy the selection constraints."""


class NotDescribable(RuntimeError):
    """No unique mention phrase exists for the target."""


@dataclass(frozen=True)
class StoryModel:
    objects: tuple[ObjectInfo, ...]
    blocks: tuple[str, ...]
    facts: tuple[Fact, ...]
    entailed: EntailedSet

    @classmethod
    def from_story(cls, story: Story, touching_implies_near: bool = True) -> "StoryModel":
        return cls(
            objects=tuple(story.objects),
            blocks=tuple(story.blocks),
            facts=tuple(story.facts),
            entailed=closure(
                story.facts, blocks=story.blocks, touching_implies_near=touching_implies_near
            ),
        )

    @classmethod
    def from_parse(cls, parsed, touching_implies_near: bool = True) -> "StoryModel":
        return cls(
            objects=tuple(parsed.objects),
            blocks=tuple(parsed.blocks),
            facts=tuple(parsed.facts),
            entailed=closure(
                parsed.facts, blocks=parsed.blocks, touching_implies_near=touching_implies_near
            ),
        )

    @property
    def object_ids(self) -> list[str]:
        return [o.id for o in self.objects]

    def info(self, oid: str) -> ObjectInfo:
        for o in self.objects:
            if o.id == oid:
                return o
        raise KeyError(oid)


def find_similar_objects(d: Descriptor, model: StoryModel) -> list[str]:
    """Story objects matching the descriptor; relative clauses use the closure."""
    hits = []
    for info in model.objects:
        if not attr_constraints_match(d, info.attrs, info.ordinal):
            continue
        if d.rel_clause is not None:
            rel, inner = d.rel_clause
            anchors = find_similar_objects(inner, model)
            if not any(
                relation_status(info.id, a, rel, model.entailed) is Truth.TRUE
                for a in anchors
                if a != info.id
            ):
                continue
        hits.append(info.id)
    return hits


# --------------------------------------------------------------------------- #
# selection and description
# --------------------------------------------------------------------------- #


def _directly_related(model: StoryModel, a: str, b: str) -> bool:
    for f in model.facts:
        if {f.subject, f.object} == {a, b}:
            return True
    return False


def choose_objects(
    model: StoryModel,
    rng: random.Random,
    n: int,
    no_similar: bool = True,
    exclude_direct: bool = False,
) -> list[str]:
    """Pick n distinct described objects honoring the stated constraints."""
    pool = model.object_ids
    if len(pool) < n:
        raise NoValidSelection(f"story describes {len(pool)} objects, need {n}")

    def ok(combo: tuple[str, ...]) -> bool:
        if no_similar:
            sigs = [model.info(oid).attrs.signature() for oid in combo]
            if len(set(sigs)) != len(sigs):
                return False
        if exclude_direct:
            for a, b in itertools.combinations(combo, 2):
                if _directly_related(model, a, b):
                    return False
        return True

    for _ in range(200):
        combo = tuple(rng.sample(pool, n))
        if ok(combo):
            return list(combo)
    for combo in itertools.combinations(pool, n):
        if ok(combo):
            return list(combo)
    raise NoValidSelection("selection constraints are unsatisfiable for this story")


def _unique_options(target: str, model: StoryModel) -> list[Descriptor]:
    info = model.info(target)
    attrs = info.attrs
    group = [o for o in model.objects if o.attrs.signature() == attrs.signature()]
    if len(group) > 1:
        return [
            Descriptor(
                shape=attrs.shape.value,
                color=attrs.color.value if attrs.color else None,
                size=attrs.size.value if attrs.size else None,
                ordinal=info.ordinal,
                definite=True,
            )
        ]
    shape = attrs.shape.value
    color = attrs.color.value if attrs.color else None
    size = attrs.size.value if attrs.size else None
    options = []
    for use_size, use_color, hypernym in itertools.product(
        (False, True), (False, True), (None, "object", "shape", "thing")
    ):
        if use_size and size is None or use_color and color is None:
            continue
        d = Descriptor(
            shape=None if hypernym else shape,
            hypernym=hypernym,
            color=color if use_color else None,
            size=size if use_size else None,
            definite=True,
        )
        if find_similar_objects(d, model) == [target]:
            options.append(d)
    return options


def describe_object(
    target: str,
    model: StoryModel,
    rng: random.Random,
    want_nested: bool = False,
) -> Descriptor:
    """A mention phrase that resolves to exactly the target object.

    With ``want_nested`` the phrase anchors the target through one of its
    entailed relations ("the circle which is above the black triangle").
    """
    if target not in model.object_ids:
        raise NotDescribable(f"{target} is not described in the story")
    if want_nested:
        nested = _nested_descriptor(target, model, rng)
        if nested is not None:
            return nested
    options = _unique_options(target, model)
    if not options:
        raise NotDescribable(f"no unique mention exists for {target}")
    full = max(options, key=lambda d: (d.hypernym is None, (d.size is not None) + (d.color is not None)))
    if rng.random() < 0.7:
        return full
    return rng.choice(options)


def _nested_descriptor(target: str, model: StoryModel, rng: random.Random) -> Optional[Descriptor]:
    anchors = []
    for other in model.object_ids:
        if other == target:
            continue
        for rel in sorted(model.entailed.relations(target, other), key=lambda r: r.value):
            if rel in QUESTION_RELATIONS:
                anchors.append((rel, other))
    rng.shuffle(anchors)
    shape = model.info(target).attrs.shape.value
    for rel, other in anchors:
        inner_options = _unique_options(other, model)
        inner_options = [d for d in inner_options if d.rel_clause is None]
        if not inner_options:
            continue
        inner = inner_options[0] if rng.random() < 0.7 else rng.choice(inner_options)
        for noun in (shape, None):
            d = Descriptor(
                shape=noun,
                hypernym=None if noun else "object",
                definite=True,
                rel_clause=(rel, inner),
            )
            if find_similar_objects(d, model) == [target]:
                return d
    return None


def _loose_descriptor(target: str, model: StoryModel, rng: random.Random, plural: bool) -> Descriptor:
    """A (possibly non-unique) attribute descriptor covering the target."""
    attrs = model.info(target).attrs
    shape = attrs.shape.value
    color = attrs.color.value if attrs.color else None
    size = attrs.size.value if attrs.size else None
    use_color = color is not None and rng.random() < 0.8
    use_size = size is not None and rng.random() < 0.6
    return Descriptor(
        shape=shape,
        color=color if use_color else None,
        size=size if use_size else None,
        plural=plural,
        definite=False,
    )


# --------------------------------------------------------------------------- #
# question assembly
# --------------------------------------------------------------------------- #


@dataclass(frozen=True)
class QuestionConfig:
    nested_prob: float = 0.55
    exclude_direct_prob: float = 0.5
    indefinite_np_prob: float = 0.2
    yn_mode_weights: tuple[float, float, float, float] = (0.55, 0.17, 0.14, 0.14)
    # relation pick for plain YN: entailed / excluded partner / unknown
    yn_pick_weights: tuple[float, float, float] = (0.58, 0.2, 0.22)
    fb_negated_prob: float = 0.4
    fb_nested_prob: float = 0.8
    co_related_weight: int = 4
    co_related_rel_prob: float = 0.85


def _render_q(
    grammar: Grammar,
    rng: random.Random,
    family: str,
    slots: dict[str, SlotFill],
) -> str:
    from .grammar import fill_template

    templates = grammar.question_templates[family]
    weights = [t.weight for t in templates]
    template = rng.choices(templates, weights=weights)[0]
    return fill_template(template, slots).text


def _np(d: Descriptor, grammar: Grammar, bare: bool = False) -> SlotFill:
    return render_descriptor(d, grammar.vocabulary, bare=bare)


def _rel_fill(rel: RelationKind, grammar: Grammar) -> SlotFill:
    return SlotFill(text=grammar.vocabulary.rel_phrase(rel))


def _weighted_pick(rng: random.Random, pools: list[list], weights: list[float]):
    available = [(pool, w) for pool, w in zip(pools, weights) if pool]
    if not available:
        return None
    chosen = rng.choices([p for p, _ in available], weights=[w for _, w in available])[0]
    return rng.choice(chosen)


def make_question(
    qtype: QType,
    model: StoryModel,
    grammar: Grammar,
    rng: random.Random,
    cfg: QuestionConfig = QuestionConfig(),
) -> Question:
    """Build one question of the given type; gold is left for the answer engine."""
    if qtype is QType.FR:
        return _make_fr(model, grammar, rng, cfg)
    if qtype is QType.YN:
        return _make_yn(model, grammar, rng, cfg)
    if qtype is QType.FB:
        return _make_fb(model, grammar, rng, cfg)
    if qtype is QType.CO:
        return _make_co(model, grammar, rng, cfg)
    raise ValueError(qtype)


def _maybe_indefinite(d: Descriptor, model: StoryModel, rng: random.Random, cfg: QuestionConfig) -> Descriptor:
    if d.rel_clause is None and d.ordinal is None and rng.random() < cfg.indefinite_np_prob:
        return replace(d, definite=False)
    return d


def _make_fr(model, grammar, rng, cfg) -> Question:
    exclude = rng.random() < cfg.exclude_direct_prob
    try:
        pair = choose_objects(model, rng, 2, no_similar=True, exclude_direct=exclude)
    except NoValidSelection:
        pair = choose_objects(model, rng, 2, no_similar=False, exclude_direct=False)
    d1 = describe_object(pair[0], model, rng, want_nested=rng.random() < cfg.nested_prob)
    d2 = describe_object(pair[1], model, rng, want_nested=rng.random() < cfg.nested_prob)
    text = _render_q(grammar, rng, "FR", {"np1": _np(d1, grammar), "np2": _np(d2, grammar)})
    lf = LogicalForm(qtype=QType.FR, args=(d1, d2))
    return Question(qtype=QType.FR, text=text, logical_form=lf, candidates=FR_LABELS)


def _entailed_question_relations(model: StoryModel, a: str, b: str) -> list[RelationKind]:
    return [r for r in QUESTION_RELATIONS if r in model.entailed.relations(a, b)]


def _pick_relation(model, rng, cfg, a: str, b: str) -> RelationKind:
    held = _entailed_question_relations(model, a, b)
    from .model import excluded_with

    refuted = sorted(
        {x for r in held for x in excluded_with(r)} - set(held), key=lambda r: r.value
    )
    unknown = [r for r in QUESTION_RELATIONS if r not in held and r not in refuted]
    pick = _weighted_pick(rng, [held, refuted, unknown], list(cfg.yn_pick_weights))
    return pick if pick is not None else rng.choice(list(QUESTION_RELATIONS))


def _make_yn(model, grammar, rng, cfg) -> Question:
    mode = rng.choices(("plain", "any_all", "any", "all"), weights=cfg.yn_mode_weights)[0]
    pair = choose_objects(model, rng, 2, no_similar=mode == "plain")
    rel = _pick_relation(model, rng, cfg, pair[0], pair[1])
    if mode == "plain":
        d1 = describe_object(pair[0], model, rng, want_nested=rng.random() < cfg.nested_prob)
        d2 = describe_object(pair[1], model, rng, want_nested=rng.random() < cfg.nested_prob)
        d1 = _maybe_indefinite(d1, model, rng, cfg)
        d2 = _maybe_indefinite(d2, model, rng, cfg)
        text = _render_q(
            grammar,
            rng,
            "YN_plain",
            {"np1": _np(d1, grammar), "rel": _rel_fill(rel, grammar), "np2": _np(d2, grammar)},
        )
        lf = LogicalForm(qtype=QType.YN, args=(d1, d2), relation=rel)
        return Question(qtype=QType.YN, text=text, logical_form=lf, candidates=YN_LABELS)

    p1 = _loose_descriptor(pair[0], model, rng, plural=True)
    if mode == "any_all":
        p2 = _loose_descriptor(pair[1], model, rng, plural=True)
        text = _render_q(
            grammar,
            rng,
            "YN_any_all",
            {
                "npp1": _np(p1, grammar, bare=True),
                "rel": _rel_fill(rel, grammar),
                "npp2": _np(p2, grammar, bare=True),
            },
        )
        lf = LogicalForm(qtype=QType.YN, args=(p1, p2), relation=rel, q1="exists", q2="all")
        return Question(qtype=QType.YN, text=text, logical_form=lf, candidates=YN_LABELS)

    d2 = describe_object(pair[1], model, rng)
    d2 = _maybe_indefinite(d2, model, rng, cfg)
    family = "YN_any" if mode == "any" else "YN_all"
    text = _render_q(
        grammar,
        rng,
        family,
        {
            "npp1": _np(p1, grammar, bare=True),
            "rel": _rel_fill(rel, grammar),
            "np2": _np(d2, grammar),
        },
    )
    lf = LogicalForm(
        qtype=QType.YN,
        args=(p1, d2),
        relation=rel,
        q1="exists" if mode == "any" else "all",
    )
    return Question(qtype=QType.YN, text=text, logical_form=lf, candidates=YN_LABELS)


def _make_fb(model, grammar, rng, cfg) -> Question:
    if not model.blocks:
        raise NoValidSelection("story describes no blocks")
    target = choose_objects(model, rng, 1, no_similar=False)[0]
    if rng.random() < cfg.fb_nested_prob:
        d = describe_object(target, model, rng, want_nested=True)
        if d.rel_clause is None:
            d = replace(_loose_descriptor(target, model, rng, plural=False), definite=False)
    else:
        d = _loose_descriptor(target, model, rng, plural=False)
    negated = rng.random() < cfg.fb_negated_prob
    family = "FB_neg" if negated else "FB_pos"
    text = _render_q(grammar, rng, family, {"np": _np(d, grammar)})
    lf = LogicalForm(qtype=QType.FB, args=(d,), negated=negated)
    return Question(
        qtype=QType.FB,
        text=text,
        logical_form=lf,
        candidates=tuple(model.blocks) + (NONE_LABEL,),
    )


def _related_pool(model: StoryModel, exclude: tuple[str, ...] = ()) -> dict[str, bool]:
    related = {}
    for oid in model.object_ids:
        if oid in exclude:
            continue
        related[oid] = any(
            model.entailed.relations(oid, other) or model.entailed.relations(other, oid)
            for other in model.object_ids
            if other != oid
        )
    return related


def _weighted_object(rng, pool: dict[str, bool], weight: int) -> str:
    ids = sorted(pool)
    weights = [weight if pool[oid] else 1 for oid in ids]
    return rng.choices(ids, weights=weights)[0]


def _make_co(model, grammar, rng, cfg) -> Question:
    if len(model.object_ids) < 3:
        raise NoValidSelection("choose-object questions need three described objects")
    pool = _related_pool(model)
    anchor = _weighted_object(rng, pool, cfg.co_related_weight)
    cand_pool = {
        oid: bool(
            model.entailed.relations(oid, anchor) or model.entailed.relations(anchor, oid)
        )
        for oid in model.object_ids
        if oid != anchor
    }
    c1 = _weighted_object(rng, cand_pool, cfg.co_related_weight)
    del cand_pool[c1]
    c2 = _weighted_object(rng, cand_pool, cfg.co_related_weight)
    if model.info(c1).attrs.signature() == model.info(c2).attrs.signature():
        info1, info2 = model.info(c1), model.info(c2)
        if info1.ordinal is None or info2.ordinal is None:
            raise NoValidSelection("candidates are indistinguishable")

    held = sorted(
        set(_entailed_question_relations(model, c1, anchor))
        | set(_entailed_question_relations(model, c2, anchor)),
        key=lambda r: r.value,
    )
    if held and rng.random() < cfg.co_related_rel_prob:
        rel = rng.choice(held)
    else:
        rel = rng.choice(list(QUESTION_RELATIONS))

    anchor_d = describe_object(anchor, model, rng, want_nested=rng.random() < cfg.nested_prob)
    c1_d = describe_object(c1, model, rng)
    c2_d = describe_object(c2, model, rng)
    family = "CO_which" if rng.random() < 0.75 else "CO_what"
    text = _render_q(
        grammar,
        rng,
        family,
        {
            "rel": _rel_fill(rel, grammar),
            "np": _np(anchor_d, grammar),
            "c1": _np(c1_d, grammar),
            "c2": _np(c2_d, grammar),
        },
    )
    lf = LogicalForm(qtype=QType.CO, args=(anchor_d, c1_d, c2_d), relation=rel)
    return Question(qtype=QType.CO, text=text, logical_form=lf, candidates=CO_LABELS)
