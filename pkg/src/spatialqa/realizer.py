"""Render selected facts into an aligned natural-language story.

The planner groups facts into sentence nuclei (converse pairs collapse into
one verbalization), chooses aggregations (relation conjunctions, object
conjunctions, plural group subjects), then renders block by block while a
realization state enforces the context-sensitive constraints: indefinite
first mention, definite afterwards, story-wide group numbering, pronoun use,
and subject-verb agreement. Every sentence is aligned to the facts it
expresses, with character spans for the trajector / indicator / landmark of
each verbalized relation.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Optional

from .grammar import (
    Grammar,
    SlotFill,
    Template,
    fill_template,
    render_descriptor,
    render_np_list,
)
from .model import (
    CONVERSE,
    EDGE_KINDS,
    Attribute,
    Descriptor,
    Fact,
    Mention,
    ObjectInfo,
    RelationKind,
    RelationSpan,
    Scene,
    Sentence,
    Span,
    Story,
    attr_constraints_match,
    converse,
    is_block_ref,
)
from .sampler import derive_seed

R = RelationKind


class UncoverableFact(ValueError):
    """No production in the grammar can express this fact."""


@dataclass(frozen=True)
class Universe:
    """Attribute and membership lookup for the entities a story may mention."""

    objects: dict[str, tuple[Attribute, Optional[str]]]
    blocks: tuple[str, ...]


def universe_from_scene(scene: Scene) -> Universe:
    return Universe(
        objects={o.id: (o.attrs, o.block_id) for o in scene.objects},
        blocks=tuple(b.name for b in scene.blocks),
    )


def universe_from_facts(facts: list[Fact], attrs: dict[str, Attribute]) -> Universe:
    """Universe for hand-built fact sets: blocks inferred, membership from In."""
    blocks = sorted({e for f in facts for e in (f.subject, f.object) if is_block_ref(e)})
    membership: dict[str, Optional[str]] = {}
    for f in facts:
        if f.relation is R.IN and f.positive:
            membership[f.subject] = f.object
    return Universe(
        objects={oid: (attrs[oid], membership.get(oid)) for oid in attrs},
        blocks=tuple(blocks),
    )


# --------------------------------------------------------------------------- #
# planning
# --------------------------------------------------------------------------- #


@dataclass
class _Unit:
    """Nucleus of one relation sentence; at most one of rels/objects is plural."""

    subjects: list[str]
    rels: list[RelationKind]
    objects: list[str]
    keys: list[str]
    block: Optional[str]


@dataclass
class _Plan:
    kind: str  # roster | single | blockrel | intro | edge | objrel
    payload: dict


def _axis(rel: RelationKind) -> str:
    if rel in (R.LEFT, R.RIGHT):
        return "h"
    if rel in (R.ABOVE, R.BELOW):
        return "v"
    return rel.value


def _pair_units(facts: list[Fact], rng: random.Random, universe: Universe) -> list[_Unit]:
    """Collapse converse pairs and pick one verbalization direction per pair-axis."""
    groups: dict[tuple[frozenset[str], str], list[Fact]] = {}
    order: list[tuple[frozenset[str], str]] = []
    for f in facts:
        key = (frozenset((f.subject, f.object)), _axis(f.relation))
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(f)
    units = []
    for key in order:
        variants = groups[key]
        chosen = variants[0] if len(variants) == 1 else rng.choice(variants)
        block = None
        if chosen.subject in universe.objects:
            block = universe.objects[chosen.subject][1]
        if block is None and chosen.object in universe.objects:
            block = universe.objects[chosen.object][1]
        units.append(
            _Unit(
                subjects=[chosen.subject],
                rels=[chosen.relation],
                objects=[chosen.object],
                keys=[f.key for f in variants],
                block=block,
            )
        )
    return units


def _aggregate_units(
    units: list[_Unit],
    rng: random.Random,
    signatures: dict[str, tuple],
    intro_first: frozenset[str] = frozenset(),
    group_denotes=None,
) -> list[_Unit]:
    # plural group subjects: look-alike objects sharing one (rel, object) fact;
    # only for objects an intro sentence will have introduced already, and only
    # when "the <n> <attrs> <shape>s" denotes exactly those objects
    by_relobj: dict[tuple[tuple, RelationKind, str], list[_Unit]] = {}
    for u in units:
        if len(u.subjects) == 1 and len(u.rels) == 1 and len(u.objects) == 1:
            sig = signatures.get(u.subjects[0])
            if sig is not None and u.subjects[0] in intro_first:
                by_relobj.setdefault((sig, u.rels[0], u.objects[0]), []).append(u)
    merged: set[int] = set()
    decided: dict[tuple, bool] = {}
    out: list[_Unit] = []
    for u in units:
        if id(u) in merged:
            continue
        if len(u.subjects) == 1 and len(u.rels) == 1 and len(u.objects) == 1:
            sig = signatures.get(u.subjects[0])
            key = (sig, u.rels[0], u.objects[0])
            peers = by_relobj.get(key, []) if sig else []
            subjects = sorted({p.subjects[0] for p in peers})
            if len(peers) > 1 and (group_denotes is None or group_denotes(sig, subjects)):
                if key not in decided:
                    decided[key] = rng.random() < 0.75
                if decided[key]:
                    keys = [k for p in peers for k in p.keys]
                    for p in peers:
                        merged.add(id(p))
                    out.append(_Unit(subjects, list(u.rels), list(u.objects), keys, u.block))
                    continue
        out.append(u)

    # relation conjunction: same subject and object ("to the right of and above")
    by_pair: dict[tuple[tuple[str, ...], str], _Unit] = {}
    result: list[_Unit] = []
    for u in out:
        if len(u.objects) == 1 and len(u.subjects) == 1:
            key = (tuple(u.subjects), u.objects[0])
            prev = by_pair.get(key)
            if (
                prev is not None
                and len(prev.rels) + len(u.rels) <= 2
                and rng.random() < 0.95
            ):
                prev.rels.extend(u.rels)
                prev.keys.extend(u.keys)
                continue
            by_pair[key] = u
        result.append(u)

    # object conjunction: same subject and relation ("above X and Y")
    by_subjrel: dict[tuple[tuple[str, ...], RelationKind], _Unit] = {}
    final: list[_Unit] = []
    for u in result:
        if len(u.rels) == 1 and len(u.subjects) == 1:
            key = (tuple(u.subjects), u.rels[0])
            prev = by_subjrel.get(key)
            if (
                prev is not None
                and len(prev.rels) == 1
                and len(prev.objects) + len(u.objects) <= 3
                and rng.random() < 0.85
            ):
                prev.objects.extend(u.objects)
                prev.keys.extend(u.keys)
                continue
            by_subjrel[key] = u
        final.append(u)
    return final


# --------------------------------------------------------------------------- #
# realization state
# --------------------------------------------------------------------------- #


@dataclass
class _State:
    universe: Universe
    described: list[str]
    ordinals: dict[str, Optional[int]]
    group_size: dict[str, int]
    introduced: set[str] = field(default_factory=set)
    stated: list[Fact] = field(default_factory=list)
    prev_objects: list[str] = field(default_factory=list)
    prev_blocks: list[str] = field(default_factory=list)

    def attrs(self, oid: str) -> Attribute:
        return self.universe.objects[oid][0]

    def info(self, oid: str) -> ObjectInfo:
        attrs, block = self.universe.objects[oid]
        return ObjectInfo(id=oid, attrs=attrs, block=block, ordinal=self.ordinals.get(oid))

    def stated_holds(self, subject: str, rel: RelationKind, obj: str) -> bool:
        for f in self.stated:
            if not f.positive:
                continue
            if f.subject == subject and f.relation is rel and f.object == obj:
                return True
            conv = converse(f.relation)
            if conv is not None and f.object == subject and conv is rel and f.subject == obj:
                return True
        return False


def _full_descriptor(attrs: Attribute, **kwargs) -> Descriptor:
    return Descriptor(
        shape=attrs.shape.value,
        color=attrs.color.value if attrs.color else None,
        size=attrs.size.value if attrs.size else None,
        **kwargs,
    )


def _matches(state: _State, d: Descriptor) -> list[str]:
    """Described-and-introduced objects the descriptor picks out (what a reader sees)."""
    out = []
    for oid in state.described:
        if oid not in state.introduced:
            continue
        if attr_constraints_match(d, state.attrs(oid), state.ordinals.get(oid)):
            out.append(oid)
    return out


def definite_descriptor(state: _State, oid: str, rng: random.Random) -> Descriptor:
    """A definite mention that picks out ``oid`` uniquely for the reader."""
    attrs = state.attrs(oid)
    sig = attrs.signature()
    introduced_peers = [
        other
        for other in state.described
        if other in state.introduced and state.attrs(other).signature() == sig
    ]
    if len(introduced_peers) > 1:
        return _full_descriptor(attrs, ordinal=state.ordinals[oid], definite=True)
    full = _full_descriptor(attrs, definite=True)
    options: list[Descriptor] = []
    shape = attrs.shape.value
    color = attrs.color.value if attrs.color else None
    size = attrs.size.value if attrs.size else None
    for use_size in (False, True):
        for use_color in (False, True):
            if (use_size and size is None) or (use_color and color is None):
                continue
            d = Descriptor(
                shape=shape,
                color=color if use_color else None,
                size=size if use_size else None,
                definite=True,
            )
            if d != full and _matches(state, d) == [oid]:
                options.append(d)
            for hypernym in ("object", "shape", "thing"):
                h = Descriptor(
                    hypernym=hypernym,
                    color=color if use_color else None,
                    size=size if use_size else None,
                    definite=True,
                )
                if _matches(state, h) == [oid]:
                    options.append(h)
    roll = rng.random()
    if options and roll > 0.55:
        hyper = [d for d in options if d.hypernym is not None]
        plain = [d for d in options if d.hypernym is None]
        if roll > 0.85 and hyper:
            return rng.choice(hyper)
        if plain:
            return rng.choice(plain)
        return rng.choice(hyper)
    return full


def _nested_landmark(state: _State, oid: str, rng: random.Random) -> Optional[Descriptor]:
    """Relative-clause mention resolvable from facts stated so far."""
    candidates: list[tuple[RelationKind, str]] = []
    for f in state.stated:
        if not f.positive or f.relation not in CONVERSE:
            continue
        for subject, rel, obj in ((f.subject, f.relation, f.object), (f.object, converse(f.relation), f.subject)):
            if subject == oid and obj in state.introduced and obj != oid:
                candidates.append((rel, obj))
    rng.shuffle(candidates)
    for rel, anchor in candidates:
        if state.group_size[anchor] > 1:
            continue
        inner = definite_descriptor(state, anchor, rng)
        if inner.rel_clause is not None:
            continue
        for noun in ("object", None):
            outer = Descriptor(
                shape=None if noun else state.attrs(oid).shape.value,
                hypernym=noun,
                definite=True,
                rel_clause=(rel, inner),
            )
            hits = [
                cand
                for cand in _matches(state, Descriptor(shape=outer.shape, hypernym=outer.hypernym))
                if state.stated_holds(cand, rel, anchor)
            ]
            if hits == [oid]:
                return outer
    return None


# --------------------------------------------------------------------------- #
# realizer
# --------------------------------------------------------------------------- #


def _pick_template(rng: random.Random, family: tuple[Template, ...]) -> Template:
    weights = [t.weight for t in family]
    return rng.choices(family, weights=weights)[0]


def _block_phrase(name: str) -> SlotFill:
    fill = SlotFill(text=f"Block {name}")
    fill.mentions.append((name, Span(0, len(fill.text)), None))
    fill.marks.setdefault("block", []).append((name, Span(0, len(fill.text))))
    return fill


def _name_list(names: list[str], block_prefix: bool = False) -> SlotFill:
    """Names joined with commas/"and"; optionally "Block" before the first one."""
    fill = SlotFill(text="")
    chunks = []
    pos = 0
    for i, name in enumerate(names):
        if i > 0:
            sep = " and " if i == len(names) - 1 else ", "
            chunks.append(sep)
            pos += len(sep)
        start = pos
        if i == 0 and block_prefix:
            chunks.append("Block ")
            pos += len("Block ")
        chunks.append(name)
        fill.mentions.append((name, Span(pos, pos + len(name)), None))
        fill.marks.setdefault("block", []).append((name, Span(start, pos + len(name))))
        pos += len(name)
    fill.text = "".join(chunks)
    return fill


def _rel_list(rels: list[RelationKind], grammar: Grammar) -> SlotFill:
    fill = SlotFill(text="")
    chunks = []
    pos = 0
    for i, rel in enumerate(rels):
        if i > 0:
            chunks.append(" and ")
            pos += 5
        phrase = grammar.vocabulary.rel_phrase(rel)
        chunks.append(phrase)
        fill.marks.setdefault("rel", []).append((rel, Span(pos, pos + len(phrase))))
        pos += len(phrase)
    fill.text = "".join(chunks)
    return fill


def realize_story(
    facts: list[Fact],
    universe: Universe,
    grammar: Grammar,
    seed: int,
) -> Story:
    """Verbalize every fact at least once (converse pairs share a sentence)."""
    rng = random.Random(derive_seed("realize", seed))

    in_facts: list[Fact] = []
    edge_facts: list[Fact] = []
    block_rels: list[Fact] = []
    obj_rels: list[Fact] = []
    for f in facts:
        if not f.positive:
            raise UncoverableFact(f"no production expresses negative facts ({f.key})")
        if f.relation is R.IN:
            in_facts.append(f)
        elif f.relation in EDGE_KINDS:
            edge_facts.append(f)
        elif is_block_ref(f.subject) and is_block_ref(f.object):
            block_rels.append(f)
        elif f.relation in CONVERSE:
            obj_rels.append(f)
        else:
            raise UncoverableFact(f"no production expresses {f.key}")

    blocks = sorted(
        {e for f in facts for e in (f.subject, f.object) if is_block_ref(e)}
    )
    described = sorted(
        {e for f in facts for e in (f.subject, f.object) if not is_block_ref(e)},
        key=lambda s: (len(s), s),
    )
    for oid in described:
        if oid not in universe.objects:
            raise UncoverableFact(f"unknown object {oid!r}")

    membership: dict[str, str] = {f.subject: f.object for f in in_facts}

    # --- plan ------------------------------------------------------------- #
    plans: list[_Plan] = []
    if blocks:
        if len(blocks) > 1 and rng.random() < 0.75:
            plans.append(_Plan("roster", {"names": blocks}))
        else:
            for name in blocks:
                plans.append(_Plan("single", {"name": name}))

    block_units = _pair_units(block_rels, rng, universe)
    by_subject_rel: dict[tuple[str, RelationKind], _Unit] = {}
    for u in block_units:
        key = (u.subjects[0], u.rels[0])
        prev = by_subject_rel.get(key)
        if prev is not None and rng.random() < 0.7:
            prev.objects.extend(u.objects)
            prev.keys.extend(u.keys)
            continue
        by_subject_rel[key] = u
        plans.append(_Plan("blockrel", {"unit": u}))

    signatures = {oid: universe.objects[oid][0].signature() for oid in described}

    def group_denotes(sig: tuple, subjects: list[str]) -> bool:
        """True when a bare plural of ``sig`` picks out exactly ``subjects``."""
        constraint = Descriptor(
            shape=sig[2], color=sig[1], size=sig[0], definite=True, plural=True
        )
        hits = [
            oid
            for oid in described
            if attr_constraints_match(constraint, universe.objects[oid][0], None)
        ]
        return hits == subjects

    obj_units = _pair_units(obj_rels, rng, universe)

    intro_order: list[str] = []
    per_block_plans: list[_Plan] = []
    for name in blocks:
        members = [oid for oid in described if membership.get(oid) == name]
        groups: dict[tuple, list[str]] = {}
        for oid in members:
            groups.setdefault(signatures[oid], []).append(oid)
        group_list = list(groups.values())
        while group_list:
            roll = rng.random()
            take = 1 if roll < 0.35 else (2 if roll < 0.8 else 3)
            take = min(take, len(group_list))
            chunk, group_list = group_list[:take], group_list[take:]
            per_block_plans.append(_Plan("intro", {"block": name, "groups": chunk}))
            for group in chunk:
                intro_order.extend(group)
        for f in edge_facts:
            if f.object == name:
                per_block_plans.append(_Plan("edge", {"fact": f}))
        units = [u for u in obj_units if u.block == name]
        units_shuffled = list(units)
        rng.shuffle(units_shuffled)
        for u in _aggregate_units(
            units_shuffled, rng, signatures, frozenset(membership), group_denotes
        ):
            per_block_plans.append(_Plan("objrel", {"unit": u}))
    homeless = [u for u in obj_units if u.block not in blocks]
    homeless = _aggregate_units(homeless, rng, signatures)
    for u in homeless:
        per_block_plans.append(_Plan("objrel", {"unit": u}))
    plans.extend(per_block_plans)

    # --- ordinals: walk plans in order, numbering look-alike group members - #
    for plan in plans:
        if plan.kind == "edge":
            oid = plan.payload["fact"].subject
            if oid not in intro_order:
                intro_order.append(oid)
        elif plan.kind == "objrel":
            for oid in plan.payload["unit"].subjects + plan.payload["unit"].objects:
                if not is_block_ref(oid) and oid not in intro_order:
                    intro_order.append(oid)
    sig_members: dict[tuple, list[str]] = {}
    for oid in intro_order:
        sig_members.setdefault(signatures[oid], []).append(oid)
    ordinals: dict[str, Optional[int]] = {}
    group_size: dict[str, int] = {}
    for sig, members in sig_members.items():
        for i, oid in enumerate(members):
            ordinals[oid] = i + 1 if len(members) > 1 else None
            group_size[oid] = len(members)

    state = _State(
        universe=universe,
        described=described,
        ordinals=ordinals,
        group_size=group_size,
    )

    # --- render ------------------------------------------------------------ #
    sentences: list[Sentence] = []
    for plan in plans:
        sentences.append(_render(plan, state, grammar, rng))

    story_objects = tuple(state.info(oid) for oid in described)
    story = Story(
        sentences=tuple(sentences),
        facts=tuple(facts),
        blocks=tuple(blocks),
        objects=story_objects,
    )
    covered = {key for s in sentences for key in s.fact_keys}
    missing = [f.key for f in facts if f.key not in covered]
    if missing:
        raise UncoverableFact("facts not covered by any sentence: " + ", ".join(missing))
    return story


def _render(plan: _Plan, state: _State, grammar: Grammar, rng: random.Random) -> Sentence:
    vocab = grammar.vocabulary
    if plan.kind == "roster":
        names = plan.payload["names"]
        tpl = _pick_template(rng, grammar.templates["blocks_roster"])
        filled = fill_template(
            tpl,
            {
                "count": SlotFill(text=vocab.number_word(len(names))),
                "names": _name_list(names),
            },
        )
        return _finish(plan, state, filled, facts=[], rel_spans=[])

    if plan.kind == "single":
        name = plan.payload["name"]
        tpl = _pick_template(rng, grammar.templates["block_single"])
        fill = SlotFill(text=name)
        fill.mentions.append((name, Span(0, len(name)), None))
        filled = fill_template(tpl, {"name": fill})
        return _finish(plan, state, filled, facts=[], rel_spans=[])

    if plan.kind == "blockrel":
        unit = plan.payload["unit"]
        tpl = _pick_template(rng, grammar.templates["block_rel"])
        filled = fill_template(
            tpl,
            {
                "ap": _block_phrase(unit.subjects[0]),
                "rel": _rel_list(unit.rels, grammar),
                "bps": _name_list(unit.objects, block_prefix=True),
            },
        )
        rel_spans = []
        trajector = filled.slot_spans["ap"]
        rel_marks = filled.marks.get("rel", [])
        name_marks = [m for m in filled.marks.get("block", []) if m[1].start >= filled.slot_spans["bps"].start]
        for target, landmark in name_marks:
            fact = Fact(unit.subjects[0], unit.rels[0], target)
            rel_spans.append(RelationSpan(fact.key, trajector, rel_marks[0][1], landmark))
        facts = [Fact(unit.subjects[0], unit.rels[0], t) for t in unit.objects]
        return _finish(plan, state, filled, facts=facts, rel_spans=rel_spans, extra_keys=unit.keys)

    if plan.kind == "intro":
        block = plan.payload["block"]
        groups = plan.payload["groups"]
        tpl = _pick_template(rng, grammar.templates["obj_intro"])
        fills = []
        total = 0
        for group in groups:
            attrs = state.attrs(group[0])
            det = None
            if len(group) == 1 and rng.random() < 0.25:
                det = "one"
            d = _full_descriptor(
                attrs,
                definite=False,
                plural=len(group) > 1,
                count=len(group) if len(group) > 1 else None,
            )
            fill = render_descriptor(d, vocab, determiner=det)
            for oid in group:
                fill.mentions.append((oid, Span(0, len(fill.text)), False))
            fills.append(fill)
            total += len(group)
        groups_fill = render_np_list(fills)
        be = "are" if len(groups[0]) > 1 else "is"
        filled = fill_template(
            tpl,
            {"bp": _block_phrase(block), "be": SlotFill(text=be), "groups": groups_fill},
        )
        indicator = filled.find_literal_word(("has", "contains", "in"))
        rel_spans = []
        facts = []
        landmark = filled.slot_spans["bp"]
        mention_spans = {m[0]: m[1] for m in filled.mentions}
        for group in groups:
            for oid in group:
                fact = Fact(oid, R.IN, block)
                facts.append(fact)
                if indicator is not None:
                    rel_spans.append(
                        RelationSpan(fact.key, mention_spans[oid], indicator, landmark)
                    )
        return _finish(plan, state, filled, facts=facts, rel_spans=rel_spans)

    if plan.kind == "edge":
        fact = plan.payload["fact"]
        oid, block = fact.subject, fact.object
        tpl = _pick_template(rng, grammar.templates["obj_edge"])
        subj_fill, plural = _subject_fill(state, [oid], rng, vocab, allow_pronoun=True)
        edge_name = vocab.edges[EDGE_KINDS[fact.relation].value]
        touching = vocab.relations["touching"]
        if state.prev_blocks == [block] and rng.random() < 0.5:
            block_text = "this block"
        else:
            block_text = f"Block {block}"
        phrase = f"{touching} the {edge_name} edge of {block_text}"
        edgephrase = SlotFill(text=phrase)
        edgephrase.marks.setdefault("indicator", []).append((fact.relation, Span(0, len(touching))))
        landmark_start = len(touching) + 1
        edgephrase.marks.setdefault("landmark", []).append(
            (block, Span(landmark_start, len(phrase)))
        )
        edgephrase.mentions.append(
            (block, Span(len(phrase) - len(block_text), len(phrase)), None)
        )
        filled = fill_template(
            tpl,
            {"subj": subj_fill, "be": SlotFill(text="is"), "edgephrase": edgephrase},
        )
        rel_spans = [
            RelationSpan(
                fact.key,
                filled.slot_spans["subj"],
                filled.marks["indicator"][0][1],
                filled.marks["landmark"][0][1],
            )
        ]
        return _finish(plan, state, filled, facts=[fact], rel_spans=rel_spans)

    if plan.kind == "objrel":
        unit = plan.payload["unit"]
        subj_fill, plural = _subject_fill(state, unit.subjects, rng, vocab, allow_pronoun=True)
        fronted = False
        if (
            len(unit.subjects) == 1
            and unit.subjects[0] not in state.introduced
            and all(o in state.introduced for o in unit.objects)
            and len(unit.objects) == 1
            and len(unit.rels) == 1
            and rng.random() < 0.5
        ):
            fronted = True
        obj_fills = []
        for obj in unit.objects:
            obj_fills.append(_object_fill(state, obj, rng, vocab))
        objs_fill = render_np_list(obj_fills)
        rels_fill = _rel_list(unit.rels, grammar)
        be = "are" if plural else "is"
        family = "obj_rel_fronted" if fronted else "obj_rel"
        tpl = _pick_template(rng, grammar.templates[family])
        filled = fill_template(
            tpl,
            {
                "subj": subj_fill,
                "be": SlotFill(text=be),
                "rels": rels_fill,
                "objs": objs_fill,
            },
        )
        mention_spans: dict[str, Span] = {}
        for entity, span, definite in filled.mentions:
            mention_spans.setdefault(entity, span)
        trajector = filled.slot_spans["subj"]
        rel_spans = []
        facts = []
        for subject in unit.subjects:
            for rel, rel_span in filled.marks.get("rel", []):
                for obj in unit.objects:
                    fact = Fact(subject, rel, obj)
                    facts.append(fact)
                    rel_spans.append(
                        RelationSpan(fact.key, trajector, rel_span, mention_spans[obj])
                    )
        return _finish(plan, state, filled, facts=facts, rel_spans=rel_spans, extra_keys=unit.keys)

    raise AssertionError(f"unknown plan kind {plan.kind}")


def _subject_fill(
    state: _State,
    subjects: list[str],
    rng: random.Random,
    vocab,
    allow_pronoun: bool,
) -> tuple[SlotFill, bool]:
    if len(subjects) > 1:
        attrs = state.attrs(subjects[0])
        d = _full_descriptor(attrs, definite=True, plural=True, count=len(subjects))
        fill = render_descriptor(d, vocab)
        for oid in subjects:
            fill.mentions.append((oid, Span(0, len(fill.text)), True))
        return fill, True
    oid = subjects[0]
    if (
        allow_pronoun
        and oid in state.introduced
        and state.prev_objects == [oid]
        and rng.random() < 0.45
    ):
        fill = SlotFill(text="it")
        fill.mentions.append((oid, Span(0, 2), None))
        return fill, False
    if oid in state.introduced:
        d = definite_descriptor(state, oid, rng)
        return render_descriptor(d, vocab, entity=oid), False
    det = "one" if rng.random() < 0.2 else None
    d = _full_descriptor(state.attrs(oid), definite=False)
    return render_descriptor(d, vocab, entity=oid, determiner=det), False


def _object_fill(state: _State, oid: str, rng: random.Random, vocab) -> SlotFill:
    if oid not in state.introduced:
        d = _full_descriptor(state.attrs(oid), definite=False)
        return render_descriptor(d, vocab, entity=oid)
    if state.group_size[oid] == 1 and rng.random() < 0.12:
        nested = _nested_landmark(state, oid, rng)
        if nested is not None:
            return render_descriptor(nested, vocab, entity=oid)
    d = definite_descriptor(state, oid, rng)
    return render_descriptor(d, vocab, entity=oid)


def _finish(
    plan: _Plan,
    state: _State,
    filled,
    facts: list[Fact],
    rel_spans: list[RelationSpan],
    extra_keys: Optional[list[str]] = None,
) -> Sentence:
    keys: list[str] = []
    for f in facts:
        if f.key not in keys:
            keys.append(f.key)
    if extra_keys:
        for k in extra_keys:
            if k not in keys:
                keys.append(k)
    mentions = tuple(
        Mention(entity=e, span=s, definite=d) for e, s, d in filled.mentions
    )
    sentence = Sentence(
        text=filled.text,
        fact_keys=tuple(keys),
        relation_spans=tuple(rel_spans),
        mentions=mentions,
    )
    object_mentions = []
    block_mentions = []
    for e, _, _ in filled.mentions:
        if is_block_ref(e):
            if e not in block_mentions:
                block_mentions.append(e)
        else:
            if e not in object_mentions:
                object_mentions.append(e)
            state.introduced.add(e)
    state.prev_objects = object_mentions
    state.prev_blocks = block_mentions
    state.stated.extend(facts)
    return sentence
