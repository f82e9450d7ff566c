"""Core domain types shared by every stage of the pipeline.

All types are immutable value objects; they carry no behaviour beyond
construction-time normalization. Scene validation reports violations as a
list instead of raising, so callers can collect every problem at once.

Entity reference convention: block ids are single uppercase letters
("A", "B", ...); object ids are "o1", "o2", ... in creation order.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

SCHEMA_VERSION = 1
GENERATOR_VERSION = "0.1.0"


class Shape(str, Enum):
    SQUARE = "square"
    CIRCLE = "circle"
    TRIANGLE = "triangle"


class Color(str, Enum):
    YELLOW = "yellow"
    BLUE = "blue"
    BLACK = "black"


class Size(str, Enum):
    SMALL = "small"
    MEDIUM = "medium"
    BIG = "big"


class Edge(str, Enum):
    TOP = "top"
    BOTTOM = "bottom"
    LEFT = "left"
    RIGHT = "right"


class RelationKind(str, Enum):
    LEFT = "left"
    RIGHT = "right"
    ABOVE = "above"
    BELOW = "below"
    NEAR = "near to"
    FAR = "far from"
    TOUCHING = "touching"
    IN = "in"
    TOUCHING_TOP = "touching-top-edge"
    TOUCHING_BOTTOM = "touching-bottom-edge"
    TOUCHING_LEFT = "touching-left-edge"
    TOUCHING_RIGHT = "touching-right-edge"


R = RelationKind

#: Kinds that relate two objects or two blocks along a direction axis.
DIRECTIONAL = frozenset({R.LEFT, R.RIGHT, R.ABOVE, R.BELOW})

#: Directional kinds compose along chains; nothing else does.
TRANSITIVE = DIRECTIONAL

#: Symmetric kinds are their own converse.
SYMMETRIC = frozenset({R.NEAR, R.FAR, R.TOUCHING})

#: Object-touches-block-border kinds, keyed by which border.
EDGE_KINDS = {
    R.TOUCHING_TOP: Edge.TOP,
    R.TOUCHING_BOTTOM: Edge.BOTTOM,
    R.TOUCHING_LEFT: Edge.LEFT,
    R.TOUCHING_RIGHT: Edge.RIGHT,
}

EDGE_BY_NAME = {e.value: k for k, e in EDGE_KINDS.items()}

CONVERSE = {
    R.LEFT: R.RIGHT,
    R.RIGHT: R.LEFT,
    R.ABOVE: R.BELOW,
    R.BELOW: R.ABOVE,
    R.NEAR: R.NEAR,
    R.FAR: R.FAR,
    R.TOUCHING: R.TOUCHING,
}

#: Pairs of kinds that can never hold together for one ordered pair.
MUTEX = {
    R.LEFT: frozenset({R.RIGHT}),
    R.RIGHT: frozenset({R.LEFT}),
    R.ABOVE: frozenset({R.BELOW}),
    R.BELOW: frozenset({R.ABOVE}),
    R.NEAR: frozenset({R.FAR}),
    R.FAR: frozenset({R.NEAR, R.TOUCHING}),
    R.TOUCHING: frozenset({R.FAR}),
}


def converse(rel: RelationKind) -> Optional[RelationKind]:
    """Converse kind, or None for In and the edge-touching kinds."""
    return CONVERSE.get(rel)


def excluded_with(rel: RelationKind) -> frozenset[RelationKind]:
    return MUTEX.get(rel, frozenset())


_BLOCK_ID = re.compile(r"^[A-Z]$")


def is_block_ref(ref: str) -> bool:
    return bool(_BLOCK_ID.match(ref))


@dataclass(frozen=True)
class Attribute:
    """Visual attributes of an object; only the shape is mandatory."""

    shape: Shape
    color: Optional[Color] = None
    size: Optional[Size] = None

    def signature(self) -> tuple:
        """Hashable identity used for grouping look-alike objects."""
        return (
            self.size.value if self.size else None,
            self.color.value if self.color else None,
            self.shape.value,
        )


@dataclass(frozen=True)
class SpatialObject:
    id: str
    attrs: Attribute
    block_id: str
    position: tuple[float, float]
    radius: float


@dataclass(frozen=True)
class Block:
    name: str
    bounds: tuple[float, float] = (1.0, 1.0)
    origin: tuple[float, float] = (0.0, 0.0)
    objects: tuple[str, ...] = ()


@dataclass(frozen=True)
class Fact:
    """A subject-relation-object triple; negative polarity only with In."""

    subject: str
    relation: RelationKind
    object: str
    positive: bool = True

    def __post_init__(self) -> None:
        if self.subject == self.object:
            raise ValueError(f"fact relates {self.subject} to itself")
        if not self.positive and self.relation is not R.IN:
            raise ValueError("negative polarity is only defined for In")

    @property
    def key(self) -> str:
        sign = "+" if self.positive else "-"
        return f"{self.subject}|{self.relation.value}|{self.object}|{sign}"

    def flipped(self) -> "Fact":
        """The converse-direction statement of the same information."""
        conv = converse(self.relation)
        if conv is None:
            raise ValueError(f"{self.relation.value} has no converse")
        return Fact(self.object, conv, self.subject, self.positive)

    def normalized(self) -> "Fact":
        """Canonical direction: lexicographically smaller subject first."""
        if self.relation in CONVERSE and self.subject > self.object:
            return self.flipped()
        return self


@dataclass(frozen=True)
class Scene:
    """Ground truth: blocks on a grid with placed, attributed objects."""

    blocks: tuple[Block, ...]
    objects: tuple[SpatialObject, ...]
    block_relations: tuple[Fact, ...] = ()

    def block_by_name(self, name: str) -> Block:
        for b in self.blocks:
            if b.name == name:
                return b
        raise KeyError(name)

    def object_by_id(self, oid: str) -> SpatialObject:
        for o in self.objects:
            if o.id == oid:
                return o
        raise KeyError(oid)

    def global_position(self, oid: str) -> tuple[float, float]:
        obj = self.object_by_id(oid)
        ox, oy = self.block_by_name(obj.block_id).origin
        return (ox + obj.position[0], oy + obj.position[1])


_EXTENT_TOL = 1e-9


def validate_scene(scene: Scene) -> list[str]:
    """Return all invariant violations; an empty list means the scene is valid."""
    violations: list[str] = []
    names = [b.name for b in scene.blocks]
    if len(set(names)) != len(names):
        violations.append("duplicate block names: " + ", ".join(sorted(names)))
    for b in scene.blocks:
        if not is_block_ref(b.name):
            violations.append(f"block name {b.name!r} is not a single uppercase letter")
        if b.bounds[0] <= 0 or b.bounds[1] <= 0:
            violations.append(f"block {b.name} has non-positive bounds")
    by_name = {b.name: b for b in scene.blocks}

    ids = [o.id for o in scene.objects]
    if len(set(ids)) != len(ids):
        violations.append("duplicate object ids")
    listed = {b.name: set(b.objects) for b in scene.blocks}
    for o in scene.objects:
        if is_block_ref(o.id):
            violations.append(f"object id {o.id!r} collides with block naming")
        if o.radius <= 0:
            violations.append(f"object {o.id} has non-positive radius")
        if o.block_id not in by_name:
            violations.append(f"object {o.id} references unknown block {o.block_id!r}")
            continue
        if o.id not in listed[o.block_id]:
            violations.append(f"object {o.id} missing from block {o.block_id} roster")
        w, h = by_name[o.block_id].bounds
        x, y = o.position
        if (
            x - o.radius < -_EXTENT_TOL
            or y - o.radius < -_EXTENT_TOL
            or x + o.radius > w + _EXTENT_TOL
            or y + o.radius > h + _EXTENT_TOL
        ):
            violations.append(f"object {o.id} extent crosses the border of block {o.block_id}")
    known_ids = set(ids)
    for name, members in listed.items():
        for oid in members:
            if oid not in known_ids:
                violations.append(f"block {name} lists unknown object {oid!r}")

    seen_pairs: set[frozenset[str]] = set()
    for f in scene.block_relations:
        if f.relation not in DIRECTIONAL:
            violations.append(f"block relation {f.key} is not directional")
            continue
        if f.subject not in by_name or f.object not in by_name:
            violations.append(f"block relation {f.key} references unknown block")
            continue
        pair = frozenset({f.subject, f.object})
        if pair in seen_pairs:
            violations.append(f"more than one relation for block pair {sorted(pair)}")
        seen_pairs.add(pair)
        ax, ay = by_name[f.subject].origin
        bx, by_ = by_name[f.object].origin
        ok = {
            R.LEFT: ax < bx,
            R.RIGHT: ax > bx,
            R.ABOVE: ay > by_,
            R.BELOW: ay < by_,
        }[f.relation]
        if not ok:
            violations.append(f"block relation {f.key} disagrees with block origins")
    return violations


# --------------------------------------------------------------------------- #
# Story
# --------------------------------------------------------------------------- #

#: Bit-exact tokenizer used for every token count in the artifact: a token is
#: a maximal run of letters/digits/apostrophes, or a single other
#: non-whitespace character.
_TOKEN = re.compile(r"[A-Za-z0-9']+|[^A-Za-z0-9'\s]")


def tokenize(text: str) -> list[str]:
    return _TOKEN.findall(text)


@dataclass(frozen=True)
class Span:
    start: int
    end: int

    def slice(self, text: str) -> str:
        return text[self.start : self.end]


@dataclass(frozen=True)
class RelationSpan:
    """Character spans of one verbalized relation inside a sentence."""

    fact_key: str
    trajector: Span
    indicator: Span
    landmark: Span


@dataclass(frozen=True)
class Mention:
    entity: str
    span: Span
    definite: Optional[bool] = None  # None for blocks and pronouns


@dataclass(frozen=True)
class Sentence:
    text: str
    fact_keys: tuple[str, ...] = ()
    relation_spans: tuple[RelationSpan, ...] = ()
    mentions: tuple[Mention, ...] = ()


@dataclass(frozen=True)
class ObjectInfo:
    """What the story said about one object (always its full attribute set)."""

    id: str
    attrs: Attribute
    block: Optional[str] = None
    ordinal: Optional[int] = None  # 1-based within the attribute signature


@dataclass(frozen=True)
class Story:
    sentences: tuple[Sentence, ...]
    facts: tuple[Fact, ...]
    blocks: tuple[str, ...] = ()
    objects: tuple[ObjectInfo, ...] = ()

    @property
    def text(self) -> str:
        return " ".join(s.text for s in self.sentences)

    @property
    def token_count(self) -> int:
        return sum(len(tokenize(s.text)) for s in self.sentences)

    @property
    def described_entities(self) -> frozenset[str]:
        return frozenset(self.blocks) | frozenset(o.id for o in self.objects)


# --------------------------------------------------------------------------- #
# Questions and answers
# --------------------------------------------------------------------------- #


class QType(str, Enum):
    FR = "FR"
    FB = "FB"
    CO = "CO"
    YN = "YN"


#: Relation labels a find-relation question may answer with; "DK" is the
#: distinguished empty answer.
FR_LABELS = ("left", "right", "below", "above", "touching", "far from", "near to")
YN_LABELS = ("Yes", "No", "DK")
CO_LABELS = ("object1", "object2", "both", "none")
DK = "DK"
NONE_LABEL = "none"


@dataclass(frozen=True)
class Descriptor:
    """A mention phrase: attribute constraints plus optional ordinal/nesting.

    ``shape`` holds a canonical shape name, or None when ``hypernym`` is used
    instead. With an ordinal set, matching is exact-signature; otherwise any
    object whose stated attributes extend the constraints matches.
    """

    shape: Optional[str] = None
    color: Optional[str] = None
    size: Optional[str] = None
    hypernym: Optional[str] = None
    ordinal: Optional[int] = None
    count: Optional[int] = None
    plural: bool = False
    definite: bool = True
    rel_clause: Optional[tuple[RelationKind, "Descriptor"]] = None

    def __post_init__(self) -> None:
        if self.shape is None and self.hypernym is None:
            raise ValueError("descriptor needs a shape or a hypernym")
        if self.shape is not None and self.hypernym is not None:
            raise ValueError("descriptor cannot carry both shape and hypernym")
        if self.nesting_depth() > 2:
            raise ValueError("relative clauses nest at most twice")

    def nesting_depth(self) -> int:
        if self.rel_clause is None:
            return 0
        return 1 + self.rel_clause[1].nesting_depth()


def attr_constraints_match(d: Descriptor, attrs: Attribute, ordinal: Optional[int]) -> bool:
    """Attribute-level descriptor matching (relative clauses handled elsewhere).

    A descriptor with an ordinal denotes one member of a look-alike group and
    matches by exact attribute signature; otherwise stated attributes must
    extend the constraints (hypernyms accept any shape).
    """
    if d.ordinal is not None:
        return attrs.signature() == (d.size, d.color, d.shape) and ordinal == d.ordinal
    if d.shape is not None and attrs.shape.value != d.shape:
        return False
    if d.color is not None and (attrs.color is None or attrs.color.value != d.color):
        return False
    if d.size is not None and (attrs.size is None or attrs.size.value != d.size):
        return False
    return True


@dataclass(frozen=True)
class LogicalForm:
    """Machine-readable query behind a question's surface text.

    args: FR (left, right); YN (subject, object); FB (target,);
    CO (anchor, candidate1, candidate2).
    q1/q2 quantify the YN subject/object side: "exists", "all", or None for
    a definite mention.
    """

    qtype: QType
    args: tuple[Descriptor, ...]
    relation: Optional[RelationKind] = None
    negated: bool = False
    q1: Optional[str] = None
    q2: Optional[str] = None


@dataclass(frozen=True)
class Justification:
    fact: Fact
    depth: int


@dataclass(frozen=True)
class AnswerSet:
    labels: tuple[str, ...]
    justification: tuple[Justification, ...] = ()
    vacuous: bool = False  # an all-quantifier ranged over an empty group

    def __post_init__(self) -> None:
        if not self.labels:
            raise ValueError("an answer carries at least one label")


@dataclass(frozen=True)
class Question:
    qtype: QType
    text: str
    logical_form: LogicalForm
    candidates: tuple[str, ...]
    gold: Optional[AnswerSet] = None
    reasoning_depth: int = 0


# --------------------------------------------------------------------------- #
# Annotations, variants, records
# --------------------------------------------------------------------------- #


@dataclass(frozen=True)
class SceneGraphNode:
    id: str
    kind: str  # "block" | "object"
    attrs: Optional[Attribute] = None


@dataclass(frozen=True)
class SceneGraphEdge:
    source: str
    relation: RelationKind
    target: str
    positive: bool = True


@dataclass(frozen=True)
class SceneGraph:
    nodes: tuple[SceneGraphNode, ...]
    edges: tuple[SceneGraphEdge, ...]


@dataclass(frozen=True)
class SprlTriplet:
    """Trajector / spatial-indicator / landmark spans for one sentence."""

    sentence_index: int
    fact_key: str
    trajector: Span
    indicator: Span
    landmark: Span


@dataclass(frozen=True)
class QuestionVariant:
    parent_index: int
    kind: str  # "consistency" | "contrast"
    question: Question


@dataclass(frozen=True)
class UnseenVariant:
    story: Story
    questions: tuple[Question, ...]


@dataclass(frozen=True)
class Variants:
    unseen: Optional[UnseenVariant] = None
    consistency: tuple[QuestionVariant, ...] = ()
    contrast: tuple[QuestionVariant, ...] = ()


@dataclass(frozen=True)
class Provenance:
    seed: int
    config_hash: str
    generator_version: str = GENERATOR_VERSION
    vocabulary: str = "seen"


@dataclass(frozen=True)
class DatasetRecord:
    record_id: str
    scene: Scene
    story: Story
    questions: tuple[Question, ...]
    scene_graph: SceneGraph
    sprl: tuple[SprlTriplet, ...]
    provenance: Provenance
    variants: Optional[Variants] = None
