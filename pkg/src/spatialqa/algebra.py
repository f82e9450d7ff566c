"""Entailment closure over stated spatial facts, with three-valued queries.

The closure is the least fixpoint of five rules applied to the stated facts:

  transitivity   R(a,b), R(b,c)            =>  R(a,c)    for directional R
  converse       R(a,b)                    =>  conv(R)(b,a)
  lifting        In(o,A), R(A,B), In(p,B)  =>  R(o,p)    for directional R
  exclusion      In(o,A)                   =>  not-In(o,X) for every other block X
  contact        Touching(a,b)             =>  NearTo(a,b)   (optional, on by default)

Each derived fact carries the minimal number of rule applications needed to
reach it (0 for stated facts), computed by cost relaxation over the
derivation hypergraph. Two mutually exclusive relations for one ordered pair
abort the closure with ``InconsistentFacts``.
"""

from __future__ import annotations

from collections import deque
from enum import Enum
from typing import Iterable, Iterator, Optional

from .model import (
    CONVERSE,
    DIRECTIONAL,
    Fact,
    RelationKind,
    converse,
    excluded_with,
    is_block_ref,
)

R = RelationKind


class InconsistentFacts(ValueError):
    """The fact set asserts two relations that cannot both hold."""


class Truth(Enum):
    TRUE = "true"
    FALSE = "false"
    UNKNOWN = "unknown"

    def __bool__(self) -> bool:  # guard against accidental truthiness
        raise TypeError("three-valued result; compare explicitly")


def t_not(v: Truth) -> Truth:
    if v is Truth.TRUE:
        return Truth.FALSE
    if v is Truth.FALSE:
        return Truth.TRUE
    return Truth.UNKNOWN


def t_and(values: Iterable[Truth]) -> Truth:
    """Strong-Kleene conjunction; empty input is vacuously true."""
    result = Truth.TRUE
    for v in values:
        if v is Truth.FALSE:
            return Truth.FALSE
        if v is Truth.UNKNOWN:
            result = Truth.UNKNOWN
    return result


def t_or(values: Iterable[Truth]) -> Truth:
    """Strong-Kleene disjunction; empty input is false."""
    result = Truth.FALSE
    for v in values:
        if v is Truth.TRUE:
            return Truth.TRUE
        if v is Truth.UNKNOWN:
            result = Truth.UNKNOWN
    return result


# (subject, relation, object, positive)
_Key = tuple[str, RelationKind, str, bool]


def _key(fact: Fact) -> _Key:
    return (fact.subject, fact.relation, fact.object, fact.positive)


class EntailedSet:
    """Immutable view of a completed closure.

    ``relations(a, b)`` is the set of positive kinds entailed for the ordered
    pair; ``excluded_from(o, b)`` reports entailed non-containment.
    """

    def __init__(
        self,
        pos: dict[tuple[str, str], frozenset[RelationKind]],
        neg_in: frozenset[tuple[str, str]],
        depth: dict[_Key, int],
        blocks: frozenset[str],
        entities: frozenset[str],
    ):
        self._pos = pos
        self._neg_in = neg_in
        self._depth = depth
        self.blocks = blocks
        self.entities = entities

    def relations(self, a: str, b: str) -> frozenset[RelationKind]:
        return self._pos.get((a, b), frozenset())

    def has(self, a: str, rel: RelationKind, b: str) -> bool:
        return rel in self.relations(a, b)

    def excluded_from(self, obj: str, block: str) -> bool:
        return (obj, block) in self._neg_in

    def depth_of(self, fact: Fact) -> Optional[int]:
        return self._depth.get(_key(fact))

    def facts(self) -> Iterator[Fact]:
        for (a, rel, b, positive) in sorted(self._depth, key=lambda k: (k[0], k[1].value, k[2], k[3])):
            yield Fact(a, rel, b, positive)

    def __len__(self) -> int:
        return len(self._depth)


class _Builder:
    def __init__(self, blocks: frozenset[str], touching_implies_near: bool):
        self.pos: dict[tuple[str, str], set[RelationKind]] = {}
        self.neg_in: set[tuple[str, str]] = set()
        self.cost: dict[_Key, int] = {}
        self.blocks = blocks
        self.touch_near = touching_implies_near
        self.agenda: deque[_Key] = deque()

    def push(self, subject: str, rel: RelationKind, obj: str, positive: bool, cost: int) -> None:
        if subject == obj:
            return
        key = (subject, rel, obj, positive)
        old = self.cost.get(key)
        if old is not None and old <= cost:
            return
        if old is None:
            self._check_consistent(subject, rel, obj, positive)
            if positive:
                self.pos.setdefault((subject, obj), set()).add(rel)
            else:
                self.neg_in.add((subject, obj))
        self.cost[key] = cost
        self.agenda.append(key)

    def _check_consistent(self, subject: str, rel: RelationKind, obj: str, positive: bool) -> None:
        held = self.pos.get((subject, obj), set())
        if positive:
            clash = excluded_with(rel) & held
            if clash:
                other = sorted(clash)[0]
                raise InconsistentFacts(
                    f"{rel.value} and {other.value} cannot both hold for ({subject}, {obj})"
                )
            if rel is R.IN and (subject, obj) in self.neg_in:
                raise InconsistentFacts(f"{subject} both in and not in {obj}")
        else:
            if R.IN in held:
                raise InconsistentFacts(f"{subject} both in and not in {obj}")

    def run(self) -> None:
        while self.agenda:
            key = self.agenda.popleft()
            subject, rel, obj, positive = key
            cost = self.cost[key]
            if not positive:
                continue

            conv = converse(rel)
            if conv is not None:
                self.push(obj, conv, subject, True, cost + 1)
            if rel is R.TOUCHING and self.touch_near:
                self.push(subject, R.NEAR, obj, True, cost + 1)

            if rel in DIRECTIONAL:
                # transitivity, joining on either side
                for (a, b), rels in list(self.pos.items()):
                    if rel not in rels:
                        continue
                    c2 = self.cost[(a, rel, b, True)]
                    if a == obj:
                        self.push(subject, rel, b, True, cost + c2 + 1)
                    if b == subject:
                        self.push(a, rel, obj, True, cost + c2 + 1)
                # lifting: this fact is the block-block premise
                if subject in self.blocks and obj in self.blocks:
                    members_a = self._members(subject)
                    members_b = self._members(obj)
                    for o, ca in members_a:
                        for p, cb in members_b:
                            if o != p:
                                self.push(o, rel, p, True, cost + ca + cb + 1)

            if rel is R.IN and obj in self.blocks:
                for other in sorted(self.blocks):
                    if other != obj:
                        self.push(subject, R.IN, other, False, cost + 1)
                # lifting: this fact is a membership premise
                for (a, b), rels in list(self.pos.items()):
                    if a not in self.blocks or b not in self.blocks:
                        continue
                    for brel in sorted(rels & DIRECTIONAL, key=lambda r: r.value):
                        c2 = self.cost[(a, brel, b, True)]
                        if a == obj:  # subject's block on the left
                            for p, cb in self._members(b):
                                if p != subject:
                                    self.push(subject, brel, p, True, cost + c2 + cb + 1)
                        if b == obj:  # subject's block on the right
                            for o, ca in self._members(a):
                                if o != subject:
                                    self.push(o, brel, subject, True, cost + c2 + ca + 1)

    def _members(self, block: str) -> list[tuple[str, int]]:
        out = []
        for (o, b), rels in self.pos.items():
            if b == block and R.IN in rels:
                out.append((o, self.cost[(o, R.IN, block, True)]))
        return out


def closure(
    stated: Iterable[Fact],
    blocks: Optional[Iterable[str]] = None,
    touching_implies_near: bool = True,
) -> EntailedSet:
    """Least fixpoint of the spatial rules over ``stated``.

    ``blocks`` fixes the block universe for the exclusion rule; when omitted
    it is inferred from the facts (In targets, edge-fact targets, and any
    single-uppercase-letter reference).

    Raises InconsistentFacts when two mutually exclusive relations are stated
    or become derivable for the same ordered pair.
    """
    stated = list(stated)
    if blocks is None:
        inferred: set[str] = set()
        for f in stated:
            for ref in (f.subject, f.object):
                if is_block_ref(ref):
                    inferred.add(ref)
        block_set = frozenset(inferred)
    else:
        block_set = frozenset(blocks)

    builder = _Builder(block_set, touching_implies_near)
    for f in stated:
        builder.push(f.subject, f.relation, f.object, f.positive, 0)
    builder.run()

    entities = set(block_set)
    for f in stated:
        entities.add(f.subject)
        entities.add(f.object)
    return EntailedSet(
        pos={pair: frozenset(rels) for pair, rels in builder.pos.items()},
        neg_in=frozenset(builder.neg_in),
        depth=dict(builder.cost),
        blocks=block_set,
        entities=frozenset(entities),
    )


def relation_status(a: str, b: str, rel: RelationKind, entailed: EntailedSet) -> Truth:
    """Three-valued membership test for one relation between two entities."""
    if rel is R.IN:
        if entailed.has(a, R.IN, b):
            return Truth.TRUE
        if entailed.excluded_from(a, b):
            return Truth.FALSE
        return Truth.UNKNOWN
    held = entailed.relations(a, b)
    if rel in held:
        return Truth.TRUE
    if excluded_with(rel) & held:
        return Truth.FALSE
    return Truth.UNKNOWN


def all_relations(a: str, b: str, entailed: EntailedSet) -> frozenset[RelationKind]:
    """Every positive relation entailed for the ordered pair; may be empty."""
    return entailed.relations(a, b)


def status_evidence(a: str, b: str, rel: RelationKind, entailed: EntailedSet) -> list[Fact]:
    """Facts that decide relation_status; empty when the status is unknown."""
    status = relation_status(a, b, rel, entailed)
    if status is Truth.TRUE:
        if rel is R.IN and not entailed.has(a, rel, b):
            return []
        return [Fact(a, rel, b)]
    if status is Truth.FALSE:
        if rel is R.IN:
            return [Fact(a, R.IN, b, positive=False)]
        clash = sorted(excluded_with(rel) & entailed.relations(a, b), key=lambda r: r.value)
        return [Fact(a, clash[0], b)]
    return []
