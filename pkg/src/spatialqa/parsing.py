"""Grammar-driven parsing of generated stories and questions back into facts.

The parser shares the grammar data file with the realizer: sentence templates
become token patterns, the lexicon drives noun-phrase and relation-phrase
recognition, and the same context-sensitive conventions (indefinite mention
introduces, definite mention resolves, story-wide group numbering, "it" and
"this block" anaphora) are applied in reverse. Parsing is the independent
text-level route to an answer: parse, close, answer.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterator, Optional

from .grammar import Grammar, Template
from .model import (
    Attribute,
    Color,
    Descriptor,
    EDGE_BY_NAME,
    Fact,
    LogicalForm,
    ObjectInfo,
    QType,
    RelationKind,
    Shape,
    Size,
    converse,
    tokenize,
)

R = RelationKind


class ParseError(ValueError):
    def __init__(self, sentence_index: int, message: str, residual: str = ""):
        self.sentence_index = sentence_index
        self.residual = residual
        detail = f"sentence {sentence_index + 1}: {message}"
        if residual:
            detail += f" (residual: {residual!r})"
        super().__init__(detail)


@dataclass
class ParseResult:
    facts: list[Fact]
    objects: list[ObjectInfo]
    blocks: list[str]
    sentence_facts: list[list[str]]
    diagnostics: list[str] = field(default_factory=list)


_SENT_SPLIT = re.compile(r"(?<=[.!?])\s+")


def _normalize_tokens(tokens: list[str]) -> list[str]:
    """Lowercase the sentence-initial word; patterns are compiled the same way.

    Single capitals other than the article "A" survive (no sentence pattern
    starts with a bare block name).
    """
    if not tokens or not tokens[0][0].isupper():
        return tokens
    if len(tokens[0]) > 1 or tokens[0] == "A":
        return [tokens[0][0].lower() + tokens[0][1:]] + tokens[1:]
    return tokens


def split_sentences(text: str) -> list[str]:
    return [s for s in _SENT_SPLIT.split(text.strip()) if s]


# --------------------------------------------------------------------------- #
# lexicon view
# --------------------------------------------------------------------------- #


class Lexicon:
    """Token-level reverse index over a grammar's vocabulary."""

    def __init__(self, grammar: Grammar):
        voc = grammar.vocabulary
        self.shape_by_word = {v: k for k, v in voc.shapes.items()}
        self.shape_by_plural = {v + "s": k for k, v in voc.shapes.items()}
        self.color_by_word = {v: k for k, v in voc.colors.items()}
        self.size_by_word = {v: k for k, v in voc.sizes.items()}
        self.hypernyms = set(voc.hypernyms)
        self.hypernym_plurals = {h + "s": h for h in voc.hypernyms}
        self.number_by_word = {w: i + 1 for i, w in enumerate(voc.numbers)}
        self.edge_by_word = {v: k for k, v in voc.edges.items()}
        # relation phrases as token tuples, longest first
        self.rel_phrases: list[tuple[tuple[str, ...], RelationKind]] = sorted(
            (
                (tuple(tokenize(phrase)), RelationKind(canon))
                for canon, phrase in voc.relations.items()
            ),
            key=lambda item: -len(item[0]),
        )
        self.grammar = grammar

    def match_relation(self, tokens: list[str], pos: int) -> Iterator[tuple[RelationKind, int]]:
        for phrase, rel in self.rel_phrases:
            end = pos + len(phrase)
            if tuple(tokens[pos:end]) == phrase:
                yield rel, end


# --------------------------------------------------------------------------- #
# noun phrases
# --------------------------------------------------------------------------- #


@dataclass(frozen=True)
class NP:
    descriptor: Descriptor
    pronoun: bool = False


def _parse_np(lex: Lexicon, tokens: list[str], pos: int, depth: int = 0) -> Iterator[tuple[NP, int]]:
    """Yield possible noun-phrase parses starting at ``pos`` (longest first)."""
    n = len(tokens)
    if pos >= n:
        return
    if tokens[pos] in ("it", "It"):
        yield NP(Descriptor(hypernym="object"), pronoun=True), pos + 1
        return
    i = pos
    definite = False
    indefinite = False
    count: Optional[int] = None
    if tokens[i] == "the":
        definite = True
        i += 1
    elif tokens[i] in ("a", "an"):
        indefinite = True
        i += 1
    if i < n and tokens[i] in lex.number_by_word and not indefinite:
        nxt = tokens[i + 1] if i + 1 < n else ""
        if nxt in lex.size_by_word or nxt in lex.color_by_word or nxt in lex.shape_by_word \
                or nxt in lex.shape_by_plural or nxt in lex.hypernyms or nxt in lex.hypernym_plurals:
            count = lex.number_by_word[tokens[i]]
            i += 1
    size = color = None
    if i < n and tokens[i] in lex.size_by_word:
        size = lex.size_by_word[tokens[i]]
        i += 1
    if i < n and tokens[i] in lex.color_by_word:
        color = lex.color_by_word[tokens[i]]
        i += 1
    if i >= n:
        return
    shape = hypernym = None
    plural = False
    tok = tokens[i]
    if tok in lex.shape_by_word:
        shape = lex.shape_by_word[tok]
    elif tok in lex.shape_by_plural:
        shape = lex.shape_by_plural[tok]
        plural = True
    elif tok in lex.hypernyms:
        hypernym = tok
    elif tok in lex.hypernym_plurals:
        hypernym = lex.hypernym_plurals[tok]
        plural = True
    else:
        return
    i += 1
    ordinal: Optional[int] = None
    if i + 1 < n and tokens[i] == "number" and tokens[i + 1] in lex.number_by_word:
        ordinal = lex.number_by_word[tokens[i + 1]]
        i += 2

    base = dict(
        shape=shape,
        color=color,
        size=size,
        hypernym=hypernym,
        ordinal=ordinal,
        count=count,
        plural=plural or bool(count and count > 1),
        definite=definite,
    )
    # optional relative clause ("which is <rel> <np>"), longest parse first
    if depth < 2 and i + 1 < n and tokens[i] == "which" and tokens[i + 1] == "is":
        j = i + 2
        for rel, after_rel in lex.match_relation(tokens, j):
            for inner, end in _parse_np(lex, tokens, after_rel, depth + 1):
                if inner.pronoun:
                    continue
                yield NP(Descriptor(**{**base, "rel_clause": (rel, inner.descriptor)})), end
    yield NP(Descriptor(**base)), i


def _descriptor_count_one(d: Descriptor) -> bool:
    return d.count == 1


# --------------------------------------------------------------------------- #
# sentence patterns
# --------------------------------------------------------------------------- #

# pattern element kinds: lit:<word> | np | nplist | rel | rels | name |
# names | count | be | edge | blockref | end


def _compile_pattern(text: str) -> list[tuple[str, str]]:
    out: list[tuple[str, str]] = []
    for token in tokenize(text):
        out.append(("lit", token))
    return out


class _SentenceGrammar:
    """Token patterns for every sentence family, derived from the grammar file."""

    def __init__(self, grammar: Grammar):
        self.lex = Lexicon(grammar)
        self.families: list[tuple[str, list[list[str]]]] = []
        for family, templates in grammar.templates.items():
            patterns = [self._template_tokens(t) for t in templates]
            self.families.append((family, patterns))

    @staticmethod
    def _template_tokens(template: Template) -> list[str]:
        tokens: list[str] = []
        for kind, payload in template.parts:
            if kind == "lit":
                tokens.extend(tokenize(payload))
            else:
                tokens.append("{" + payload + "}")
        if tokens and not tokens[0].startswith("{") and len(tokens[0]) > 1:
            tokens[0] = tokens[0][0].lower() + tokens[0][1:]
        return tokens


def _match_pattern(
    lex: Lexicon, pattern: list[str], tokens: list[str]
) -> Iterator[dict[str, object]]:
    """Backtracking match of a template token pattern against sentence tokens."""

    def step(pi: int, ti: int, bindings: dict) -> Iterator[dict]:
        if pi == len(pattern):
            if ti == len(tokens):
                yield bindings
            return
        part = pattern[pi]
        if not part.startswith("{"):
            if ti < len(tokens) and (
                tokens[ti] == part
                or (ti == 0 and tokens[ti].lower() == part.lower())
            ):
                yield from step(pi + 1, ti + 1, bindings)
            return
        slot = part[1:-1]
        if slot == "name":
            if ti < len(tokens) and re.fullmatch(r"[A-Z]", tokens[ti]):
                yield from step(pi + 1, ti + 1, {**bindings, slot: tokens[ti]})
            return
        if slot == "count":
            if ti < len(tokens) and tokens[ti] in lex.number_by_word:
                yield from step(pi + 1, ti + 1, {**bindings, slot: lex.number_by_word[tokens[ti]]})
            return
        if slot == "be":
            if ti < len(tokens) and tokens[ti] in ("is", "are"):
                yield from step(pi + 1, ti + 1, {**bindings, slot: tokens[ti]})
            return
        if slot == "names":
            for names, end in _match_name_list(tokens, ti):
                yield from step(pi + 1, end, {**bindings, slot: names})
            return
        if slot == "ap":
            if (
                ti + 1 < len(tokens)
                and tokens[ti] in ("Block", "block")
                and re.fullmatch(r"[A-Z]", tokens[ti + 1])
            ):
                yield from step(pi + 1, ti + 2, {**bindings, slot: tokens[ti + 1]})
            return
        if slot == "bp":
            first = tokens[ti] if ti < len(tokens) else ""
            if ti + 1 < len(tokens) and first in ("Block", "block") and re.fullmatch(r"[A-Z]", tokens[ti + 1]):
                yield from step(pi + 1, ti + 2, {**bindings, slot: tokens[ti + 1]})
            return
        if slot == "bps":
            if ti + 1 < len(tokens) and tokens[ti] == "Block" and re.fullmatch(r"[A-Z]", tokens[ti + 1]):
                for names, end in _match_name_list(tokens, ti + 1):
                    yield from step(pi + 1, end, {**bindings, slot: names})
            return
        if slot in ("rel", "rels"):
            for rels, end in _match_rel_list(lex, tokens, ti, multi=slot == "rels"):
                yield from step(pi + 1, end, {**bindings, slot: rels})
            return
        if slot in ("subj", "np", "np1", "np2", "c1", "c2"):
            for np, end in _parse_np(lex, tokens, ti):
                yield from step(pi + 1, end, {**bindings, slot: np})
            return
        if slot in ("npp1", "npp2"):
            for np, end in _parse_np(lex, tokens, ti):
                if not np.pronoun and np.descriptor.plural and not np.descriptor.definite:
                    yield from step(pi + 1, end, {**bindings, slot: np})
            return
        if slot in ("objs", "groups"):
            for nps, end in _match_np_list(lex, tokens, ti):
                yield from step(pi + 1, end, {**bindings, slot: nps})
            return
        if slot == "edgephrase":
            for payload, end in _match_edgephrase(lex, tokens, ti):
                yield from step(pi + 1, end, {**bindings, slot: payload})
            return
        raise AssertionError(f"unknown slot {slot!r} in pattern")

    yield from step(0, 0, {})


def _match_name_list(tokens: list[str], pos: int) -> Iterator[tuple[list[str], int]]:
    names = []
    i = pos
    if i >= len(tokens) or not re.fullmatch(r"[A-Z]", tokens[i]):
        return
    names.append(tokens[i])
    i += 1
    while i < len(tokens):
        if tokens[i] == "," and i + 1 < len(tokens) and re.fullmatch(r"[A-Z]", tokens[i + 1]):
            names.append(tokens[i + 1])
            i += 2
        elif tokens[i] == "and" and i + 1 < len(tokens) and re.fullmatch(r"[A-Z]", tokens[i + 1]):
            names.append(tokens[i + 1])
            i += 2
            break
        else:
            break
    yield list(names), i


def _match_rel_list(
    lex: Lexicon, tokens: list[str], pos: int, multi: bool
) -> Iterator[tuple[list[RelationKind], int]]:
    for rel, end in lex.match_relation(tokens, pos):
        if multi and end + 1 < len(tokens) and tokens[end] == "and":
            for rel2, end2 in lex.match_relation(tokens, end + 1):
                yield [rel, rel2], end2
        yield [rel], end


def _match_np_list(lex: Lexicon, tokens: list[str], pos: int) -> Iterator[tuple[list[NP], int]]:
    for np1, end1 in _parse_np(lex, tokens, pos):
        if end1 < len(tokens) and tokens[end1] in (",", "and"):
            for rest, end2 in _match_np_list(lex, tokens, end1 + 1):
                yield [np1] + rest, end2
        yield [np1], end1


def _match_edgephrase(lex: Lexicon, tokens: list[str], pos: int) -> Iterator[tuple[dict, int]]:
    touching = tuple(tokenize(lex.grammar.vocabulary.relations["touching"]))
    end = pos + len(touching)
    if tuple(tokens[pos:end]) != touching:
        return
    # "the <edge> edge of (Block X | this block)"
    i = end
    if i + 3 >= len(tokens) or tokens[i] != "the":
        return
    edge_word = tokens[i + 1]
    if edge_word not in lex.edge_by_word or tokens[i + 2] != "edge" or tokens[i + 3] != "of":
        return
    i += 4
    if i + 1 < len(tokens) and tokens[i] == "Block" and re.fullmatch(r"[A-Z]", tokens[i + 1]):
        yield {"edge": lex.edge_by_word[edge_word], "block": tokens[i + 1]}, i + 2
    elif i + 1 < len(tokens) and tokens[i] == "this" and tokens[i + 1] == "block":
        yield {"edge": lex.edge_by_word[edge_word], "block": None}, i + 2


# --------------------------------------------------------------------------- #
# semantic pass
# --------------------------------------------------------------------------- #


class _Reader:
    """Incremental entity table with the realizer's mention conventions."""

    def __init__(self):
        self.objects: list[ObjectInfo] = []
        self.blocks: list[str] = []
        self.facts: list[Fact] = []
        self.sig_counter: dict[tuple, list[str]] = {}
        self.prev_objects: list[str] = []
        self.prev_blocks: list[str] = []
        self._next = 1

    def snapshot(self):
        return (
            list(self.objects),
            list(self.blocks),
            list(self.facts),
            {k: list(v) for k, v in self.sig_counter.items()},
            list(self.prev_objects),
            list(self.prev_blocks),
            self._next,
        )

    def restore(self, snap) -> None:
        (
            self.objects,
            self.blocks,
            self.facts,
            self.sig_counter,
            self.prev_objects,
            self.prev_blocks,
            self._next,
        ) = (
            list(snap[0]),
            list(snap[1]),
            list(snap[2]),
            {k: list(v) for k, v in snap[3].items()},
            list(snap[4]),
            list(snap[5]),
            snap[6],
        )

    def add_block(self, name: str) -> None:
        if name not in self.blocks:
            self.blocks.append(name)

    def signature_of(self, d: Descriptor) -> tuple:
        return (d.size, d.color, d.shape)

    def introduce(self, d: Descriptor, block: Optional[str]) -> str:
        if d.hypernym is not None:
            raise ValueError("an introduction must name a concrete shape")
        attrs = Attribute(
            shape=Shape(d.shape),
            color=Color(d.color) if d.color else None,
            size=Size(d.size) if d.size else None,
        )
        oid = f"e{self._next}"
        self._next += 1
        info = ObjectInfo(id=oid, attrs=attrs, block=block, ordinal=None)
        self.objects.append(info)
        members = self.sig_counter.setdefault(attrs.signature(), [])
        members.append(oid)
        if len(members) > 1:
            self._renumber(attrs.signature())
        return oid

    def _renumber(self, sig: tuple) -> None:
        members = self.sig_counter[sig]
        for rank, oid in enumerate(members, start=1):
            for i, info in enumerate(self.objects):
                if info.id == oid:
                    self.objects[i] = ObjectInfo(info.id, info.attrs, info.block, rank)

    def info(self, oid: str) -> ObjectInfo:
        for info in self.objects:
            if info.id == oid:
                return info
        raise KeyError(oid)

    def set_block(self, oid: str, block: str) -> None:
        for i, info in enumerate(self.objects):
            if info.id == oid and info.block is None:
                self.objects[i] = ObjectInfo(info.id, info.attrs, block, info.ordinal)

    def stated_holds(self, subject: str, rel: RelationKind, obj: str) -> bool:
        for f in self.facts:
            if not f.positive:
                continue
            if f.subject == subject and f.relation is rel and f.object == obj:
                return True
            conv = converse(f.relation)
            if conv is not None and f.object == subject and conv is rel and f.subject == obj:
                return True
        return False

    def resolve(self, d: Descriptor) -> list[str]:
        """Objects matching a definite descriptor against the table so far."""
        from .model import attr_constraints_match

        hits = []
        for info in self.objects:
            if not attr_constraints_match(d, info.attrs, info.ordinal):
                continue
            if d.rel_clause is not None:
                rel, inner = d.rel_clause
                anchors = self.resolve(inner)
                if not any(self.stated_holds(info.id, rel, a) for a in anchors if a != info.id):
                    continue
            hits.append(info.id)
        return hits


def _resolve_np(reader: _Reader, np: NP, index: int, *, introducing_block: Optional[str] = None) -> list[str]:
    """Resolve one mention to entity ids, introducing on indefinites."""
    d = np.descriptor
    if np.pronoun:
        if len(reader.prev_objects) != 1:
            raise ParseError(index, "pronoun without a unique antecedent")
        return [reader.prev_objects[0]]
    if d.definite:
        hits = reader.resolve(d)
        if d.count is not None and d.count > 1:
            if len(hits) != d.count:
                raise ParseError(index, f"definite group of {d.count} matches {len(hits)} objects")
            return hits
        if d.plural:
            if not hits:
                raise ParseError(index, "definite plural mention matches nothing")
            return hits
        if len(hits) != 1:
            raise ParseError(
                index, f"definite mention matches {len(hits)} objects, expected exactly 1"
            )
        return hits
    count = d.count if d.count and d.count > 1 else 1
    try:
        return [reader.introduce(d, introducing_block) for _ in range(count)]
    except ValueError as exc:
        raise ParseError(index, str(exc)) from None


def parse_story(text: str, grammar: Grammar) -> ParseResult:
    """Parse generated story text; raises ParseError with the sentence index."""
    sg = _SentenceGrammar(grammar)
    reader = _Reader()
    sentence_facts: list[list[str]] = []
    for index, sentence in enumerate(split_sentences(text)):
        tokens = _normalize_tokens(tokenize(sentence))
        parsed = False
        for family, patterns in sg.families:
            for pattern in patterns:
                for bindings in _match_pattern(sg.lex, pattern, tokens):
                    snap = reader.snapshot()
                    try:
                        new_facts, obj_mentions, block_mentions = _interpret(
                            reader, family, bindings, index
                        )
                    except ParseError:
                        reader.restore(snap)
                        continue
                    for f in new_facts:
                        reader.facts.append(f)
                    sentence_facts.append([f.key for f in new_facts])
                    reader.prev_objects = obj_mentions
                    reader.prev_blocks = block_mentions
                    parsed = True
                    break
                if parsed:
                    break
            if parsed:
                break
        if not parsed:
            raise ParseError(index, "no sentence pattern matches", residual=sentence)
    return ParseResult(
        facts=list(reader.facts),
        objects=list(reader.objects),
        blocks=list(reader.blocks),
        sentence_facts=sentence_facts,
    )


def _interpret(
    reader: _Reader, family: str, bindings: dict, index: int
) -> tuple[list[Fact], list[str], list[str]]:
    facts: list[Fact] = []
    obj_mentions: list[str] = []
    block_mentions: list[str] = []

    def note_obj(ids: list[str]) -> None:
        for oid in ids:
            if oid not in obj_mentions:
                obj_mentions.append(oid)

    if family == "blocks_roster":
        names = bindings["names"]
        if bindings.get("count") not in (None, len(names)):
            raise ParseError(index, "block count disagrees with the name list")
        for name in names:
            reader.add_block(name)
            block_mentions.append(name)
        return facts, obj_mentions, block_mentions

    if family == "block_single":
        reader.add_block(bindings["name"])
        block_mentions.append(bindings["name"])
        return facts, obj_mentions, block_mentions

    if family == "block_rel":
        subject = bindings["ap"]
        rel = bindings["rel"][0]
        reader.add_block(subject)
        block_mentions.append(subject)
        for target in bindings["bps"]:
            reader.add_block(target)
            block_mentions.append(target)
            facts.append(Fact(subject, rel, target))
        return facts, obj_mentions, block_mentions

    if family == "obj_intro":
        block = bindings["bp"]
        reader.add_block(block)
        block_mentions.append(block)
        for np in bindings["groups"]:
            if np.pronoun or np.descriptor.definite:
                raise ParseError(index, "an introduction must be indefinite")
            ids = _resolve_np(reader, np, index, introducing_block=block)
            note_obj(ids)
            for oid in ids:
                facts.append(Fact(oid, R.IN, block))
        return facts, obj_mentions, block_mentions

    if family in ("obj_rel", "obj_rel_fronted"):
        subj_np = bindings["subj"]
        rels = bindings["rels"]
        obj_nps = bindings["objs"]
        if family == "obj_rel_fronted":
            targets = [oid for np in obj_nps for oid in _resolve_np(reader, np, index)]
            subjects = _resolve_np(reader, subj_np, index)
        else:
            subjects = _resolve_np(reader, subj_np, index)
            targets = [oid for np in obj_nps for oid in _resolve_np(reader, np, index)]
        note_obj(subjects)
        note_obj(targets)
        for subject in subjects:
            for rel in rels:
                for target in targets:
                    if subject == target:
                        raise ParseError(index, "an object cannot relate to itself")
                    facts.append(Fact(subject, rel, target))
        return facts, obj_mentions, block_mentions

    if family == "obj_edge":
        payload = bindings["edgephrase"]
        block = payload["block"]
        if block is None:
            if len(reader.prev_blocks) != 1:
                raise ParseError(index, "'this block' without a unique antecedent")
            block = reader.prev_blocks[0]
        reader.add_block(block)
        block_mentions.append(block)
        subjects = _resolve_np(reader, bindings["subj"], index)
        note_obj(subjects)
        for subject in subjects:
            reader.set_block(subject, block)
            facts.append(Fact(subject, EDGE_BY_NAME[payload["edge"]], block))
        return facts, obj_mentions, block_mentions

    raise AssertionError(f"unknown family {family}")


# --------------------------------------------------------------------------- #
# questions
# --------------------------------------------------------------------------- #

_QTYPE_BY_FAMILY = {
    "FR": QType.FR,
    "YN_plain": QType.YN,
    "YN_any_all": QType.YN,
    "YN_any": QType.YN,
    "YN_all": QType.YN,
    "YN_the_all": QType.YN,
    "FB_pos": QType.FB,
    "FB_neg": QType.FB,
    "CO_which": QType.CO,
    "CO_what": QType.CO,
}


def parse_question(text: str, grammar: Grammar) -> tuple[LogicalForm, str]:
    """Parse question text into a logical form; returns (form, family)."""
    lex = Lexicon(grammar)
    tokens = _normalize_tokens(tokenize(text))
    for family, templates in grammar.question_templates.items():
        for template in templates:
            pattern = _SentenceGrammar._template_tokens(template)
            for bindings in _match_pattern(lex, pattern, tokens):
                lf = _question_lf(family, bindings)
                if lf is not None:
                    return lf, family
    raise ParseError(0, "no question pattern matches", residual=text)


def _question_lf(family: str, bindings: dict) -> Optional[LogicalForm]:
    qtype = _QTYPE_BY_FAMILY[family]
    if family == "FR":
        d1, d2 = bindings["np1"].descriptor, bindings["np2"].descriptor
        return LogicalForm(qtype=qtype, args=(d1, d2))
    if family == "YN_plain":
        return LogicalForm(
            qtype=qtype,
            args=(bindings["np1"].descriptor, bindings["np2"].descriptor),
            relation=bindings["rel"][0],
        )
    if family == "YN_any_all":
        return LogicalForm(
            qtype=qtype,
            args=(bindings["npp1"].descriptor, bindings["npp2"].descriptor),
            relation=bindings["rel"][0],
            q1="exists",
            q2="all",
        )
    if family == "YN_any":
        return LogicalForm(
            qtype=qtype,
            args=(bindings["npp1"].descriptor, bindings["np2"].descriptor),
            relation=bindings["rel"][0],
            q1="exists",
        )
    if family == "YN_all":
        return LogicalForm(
            qtype=qtype,
            args=(bindings["npp1"].descriptor, bindings["np2"].descriptor),
            relation=bindings["rel"][0],
            q1="all",
        )
    if family == "YN_the_all":
        return LogicalForm(
            qtype=qtype,
            args=(bindings["np1"].descriptor, bindings["npp2"].descriptor),
            relation=bindings["rel"][0],
            q2="all",
        )
    if family in ("FB_pos", "FB_neg"):
        return LogicalForm(
            qtype=qtype,
            args=(bindings["np"].descriptor,),
            negated=family == "FB_neg",
        )
    if family in ("CO_which", "CO_what"):
        return LogicalForm(
            qtype=qtype,
            args=(
                bindings["np"].descriptor,
                bindings["c1"].descriptor,
                bindings["c2"].descriptor,
            ),
            relation=bindings["rel"][0],
        )
    return None


def canonical_facts(
    facts: list[Fact], objects: list[ObjectInfo]
) -> frozenset[tuple[str, RelationKind, str, bool]]:
    """Entity-name-independent, converse-normalized view of a fact set.

    Objects are keyed by (attributes, group ordinal), blocks by name, and each
    directional or symmetric fact is flipped so the smaller key comes first;
    this is the equality used by the round-trip contract.
    """
    keys = {
        o.id: "obj|" + "|".join(str(x) for x in o.attrs.signature()) + f"|{o.ordinal or 0}"
        for o in objects
    }

    def key_of(ref: str) -> str:
        return keys.get(ref, f"blk|{ref}")

    out = set()
    for f in facts:
        a, b = key_of(f.subject), key_of(f.object)
        rel = f.relation
        if rel in {r for r in RelationKind if converse(r) is not None} and a > b:
            a, b = b, a
            rel = converse(rel)
        out.add((a, rel, b, f.positive))
    return frozenset(out)


def solve(story_text: str, question_text: str, grammar: Grammar):
    """Answer a question from raw text alone: parse, close, answer."""
    from .answers import answer_logical_form
    from .questions import StoryModel

    parsed = parse_story(story_text, grammar)
    model = StoryModel.from_parse(parsed)
    lf, _ = parse_question(question_text, grammar)
    answer, _depth = answer_logical_form(lf, model)
    return answer
