"""Grammar loading, validation, template filling, and mention rendering.

The grammar lives in a JSON data file so the unseen-vocabulary variant can
swap every surface form without touching code. Sentence templates are flat
strings with named slots; the same file drives generation and parsing.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace
from importlib import resources
from typing import Optional

from .model import Color, Descriptor, Edge, RelationKind, Shape, Size, Span

R = RelationKind

#: Object-to-object relation kinds a grammar must lexicalize.
OBJECT_RELATIONS = (R.LEFT, R.RIGHT, R.ABOVE, R.BELOW, R.NEAR, R.FAR, R.TOUCHING)

#: Slots the engine fills per sentence family; unknown families are orphans.
SENTENCE_SLOTS = {
    "blocks_roster": {"count", "names"},
    "block_single": {"name"},
    "block_rel": {"ap", "rel", "bps"},
    "obj_intro": {"bp", "be", "groups"},
    "obj_rel": {"subj", "be", "rels", "objs"},
    "obj_rel_fronted": {"rels", "objs", "be", "subj"},
    "obj_edge": {"subj", "be", "edgephrase"},
}

QUESTION_SLOTS = {
    "FR": {"np1", "np2"},
    "YN_plain": {"np1", "rel", "np2"},
    "YN_any_all": {"npp1", "rel", "npp2"},
    "YN_any": {"npp1", "rel", "np2"},
    "YN_all": {"npp1", "rel", "np2"},
    "YN_the_all": {"np1", "rel", "npp2"},
    "FB_pos": {"np"},
    "FB_neg": {"np"},
    "CO_which": {"rel", "np", "c1", "c2"},
    "CO_what": {"rel", "np", "c1", "c2"},
}

_VOWELS = "aeiou"


def indefinite_article(word: str) -> str:
    return "an" if word[:1].lower() in _VOWELS else "a"


@dataclass(frozen=True)
class Vocabulary:
    """Surface forms for every canonical term; keys are canonical names."""

    shapes: dict[str, str]
    colors: dict[str, str]
    sizes: dict[str, str]
    hypernyms: tuple[str, ...]
    relations: dict[str, str]
    edges: dict[str, str]
    numbers: tuple[str, ...]

    def shape_word(self, canonical: str) -> str:
        return self.shapes[canonical]

    def rel_phrase(self, rel: RelationKind) -> str:
        return self.relations[rel.value]

    def number_word(self, n: int) -> str:
        return self.numbers[n - 1]

    def plural(self, noun: str) -> str:
        return noun + "s"


@dataclass(frozen=True)
class Template:
    text: str
    weight: float
    parts: tuple[tuple[str, str], ...]  # ("lit", text) | ("slot", name)

    @property
    def slots(self) -> frozenset[str]:
        return frozenset(name for kind, name in self.parts if kind == "slot")


_SLOT_RE = re.compile(r"\{(\w+)\}")


def compile_template(text: str, weight: float = 1.0) -> Template:
    parts: list[tuple[str, str]] = []
    pos = 0
    for m in _SLOT_RE.finditer(text):
        if m.start() > pos:
            parts.append(("lit", text[pos : m.start()]))
        parts.append(("slot", m.group(1)))
        pos = m.end()
    if pos < len(text):
        parts.append(("lit", text[pos:]))
    return Template(text=text, weight=weight, parts=tuple(parts))


@dataclass
class SlotFill:
    """Slot content plus sub-spans the caller wants tracked (all relative)."""

    text: str
    mentions: list[tuple[str, Span, Optional[bool]]] = field(default_factory=list)
    marks: dict[str, list[tuple[object, Span]]] = field(default_factory=dict)


@dataclass
class FilledSentence:
    text: str
    slot_spans: dict[str, Span]
    mentions: list[tuple[str, Span, Optional[bool]]]
    marks: dict[str, list[tuple[object, Span]]]
    literals: list[tuple[str, Span]] = field(default_factory=list)

    def find_literal_word(self, words: tuple[str, ...]) -> Optional[Span]:
        """Span of the first literal word matching ``words`` (case-insensitive)."""
        lowered = {w.lower() for w in words}
        for text, span in self.literals:
            offset = span.start
            for m in re.finditer(r"[A-Za-z']+", text):
                if m.group(0).lower() in lowered:
                    return Span(offset + m.start(), offset + m.end())
        return None


def fill_template(template: Template, values: dict[str, SlotFill]) -> FilledSentence:
    chunks: list[str] = []
    pos = 0
    slot_spans: dict[str, Span] = {}
    mentions: list[tuple[str, Span, Optional[bool]]] = []
    marks: dict[str, list[tuple[object, Span]]] = {}
    literals: list[tuple[str, Span]] = []
    for kind, payload in template.parts:
        if kind == "lit":
            literals.append((payload, Span(pos, pos + len(payload))))
            chunks.append(payload)
            pos += len(payload)
            continue
        fill = values[payload]
        slot_spans[payload] = Span(pos, pos + len(fill.text))
        for entity, span, definite in fill.mentions:
            mentions.append((entity, Span(span.start + pos, span.end + pos), definite))
        for key, items in fill.marks.items():
            marks.setdefault(key, []).extend(
                (item, Span(span.start + pos, span.end + pos)) for item, span in items
            )
        chunks.append(fill.text)
        pos += len(fill.text)
    text = "".join(chunks)
    for i, ch in enumerate(text):
        if ch.isalpha():
            text = text[:i] + ch.upper() + text[i + 1 :]
            break
    return FilledSentence(
        text=text, slot_spans=slot_spans, mentions=mentions, marks=marks, literals=literals
    )


@dataclass(frozen=True)
class Grammar:
    vocabulary: Vocabulary
    templates: dict[str, tuple[Template, ...]]
    question_templates: dict[str, tuple[Template, ...]]
    version: int = 1


def _load_json(path) -> dict:
    if path is None:
        with resources.files("spatialqa").joinpath("data/grammar.json").open("r") as fh:
            return json.load(fh)
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def load_grammar(path=None) -> Grammar:
    data = _load_json(path)
    voc = data["vocabulary"]
    vocabulary = Vocabulary(
        shapes=dict(voc["shapes"]),
        colors=dict(voc["colors"]),
        sizes=dict(voc["sizes"]),
        hypernyms=tuple(voc["hypernyms"]),
        relations=dict(voc["relations"]),
        edges=dict(voc["edges"]),
        numbers=tuple(voc["numbers"]),
    )

    def compile_family(entries) -> tuple[Template, ...]:
        return tuple(compile_template(e["text"], e.get("weight", 1)) for e in entries)

    return Grammar(
        vocabulary=vocabulary,
        templates={name: compile_family(v) for name, v in data["templates"].items()},
        question_templates={
            name: compile_family(v) for name, v in data["question_templates"].items()
        },
        version=data.get("version", 1),
    )


def validate_grammar(grammar: Grammar) -> list[str]:
    """Structural violations: orphan families, missing families, bad lexicon keys."""
    violations: list[str] = []
    voc = grammar.vocabulary

    def check_keys(mapping: dict[str, str], expected: set[str], label: str) -> None:
        extra = set(mapping) - expected
        missing = expected - set(mapping)
        for key in sorted(extra):
            violations.append(f"{label} {key!r} is not in the vocabulary")
        for key in sorted(missing):
            violations.append(f"{label} {key!r} has no surface form")

    check_keys(voc.shapes, {s.value for s in Shape}, "shape")
    check_keys(voc.colors, {c.value for c in Color}, "color")
    check_keys(voc.sizes, {s.value for s in Size}, "size")
    check_keys(voc.relations, {r.value for r in OBJECT_RELATIONS}, "relation")
    check_keys(voc.edges, {e.value for e in Edge}, "edge")
    if len(voc.numbers) < 4:
        violations.append("vocabulary needs at least four number words")
    if not voc.hypernyms:
        violations.append("vocabulary needs at least one hypernym")

    for registry, families, label in (
        (SENTENCE_SLOTS, grammar.templates, "sentence family"),
        (QUESTION_SLOTS, grammar.question_templates, "question family"),
    ):
        for name in sorted(set(families) - set(registry)):
            violations.append(f"{label} {name!r} is not reachable by the engine")
        for name in sorted(set(registry) - set(families)):
            violations.append(f"{label} {name!r} is missing from the grammar")
        for name in sorted(set(families) & set(registry)):
            if not families[name]:
                violations.append(f"{label} {name!r} has no productions")
                continue
            for tpl in families[name]:
                unknown = tpl.slots - registry[name]
                if unknown:
                    violations.append(
                        f"{label} {name!r} uses unknown slots: {', '.join(sorted(unknown))}"
                    )
    return violations


# --------------------------------------------------------------------------- #
# mention rendering
# --------------------------------------------------------------------------- #


def descriptor_noun(d: Descriptor, vocab: Vocabulary) -> str:
    return vocab.shape_word(d.shape) if d.shape is not None else d.hypernym or "object"


def render_descriptor(
    d: Descriptor,
    vocab: Vocabulary,
    entity: Optional[str] = None,
    determiner: Optional[str] = None,
    bare: bool = False,
    depth: int = 0,
) -> SlotFill:
    """Render one mention phrase, tracking entity and relation sub-spans.

    ``determiner`` overrides the default article ("one" for counted intros);
    ``bare`` drops the determiner entirely (quantified question forms).
    """
    words: list[str] = []
    noun = descriptor_noun(d, vocab)
    attr_words = [w for w in (vocab.sizes.get(d.size), vocab.colors.get(d.color)) if w]
    head = attr_words[0] if attr_words else noun
    if not bare:
        if determiner is not None:
            words.append(determiner)
        elif d.definite:
            words.append("the")
            if d.count is not None and d.count > 1:
                words.append(vocab.number_word(d.count))
        elif d.count is not None and d.count > 1:
            words.append(vocab.number_word(d.count))
        else:
            words.append(indefinite_article(head))
    words.extend(attr_words)
    words.append(vocab.plural(noun) if d.plural else noun)
    if d.ordinal is not None:
        words.extend(["number", vocab.number_word(d.ordinal)])
    text = " ".join(words)
    fill = SlotFill(text=text)
    if d.rel_clause is not None:
        rel, inner = d.rel_clause
        rel_phrase = vocab.rel_phrase(rel)
        inner_fill = render_descriptor(inner, vocab, depth=depth + 1)
        prefix = text + " which is "
        rel_span = Span(len(prefix), len(prefix) + len(rel_phrase))
        inner_offset = len(prefix) + len(rel_phrase) + 1
        fill.text = prefix + rel_phrase + " " + inner_fill.text
        fill.marks.setdefault("clause_rel", []).append((rel, rel_span))
        for key, items in inner_fill.marks.items():
            fill.marks.setdefault(key, []).extend(
                (item, Span(s.start + inner_offset, s.end + inner_offset)) for item, s in items
            )
    if entity is not None:
        fill.mentions.append((entity, Span(0, len(fill.text)), d.definite if not bare else None))
    return fill


def render_np_list(fills: list[SlotFill]) -> SlotFill:
    """Join phrases with commas and a final "and", merging tracked spans."""
    out = SlotFill(text="")
    pos = 0
    chunks: list[str] = []
    for i, fill in enumerate(fills):
        if i > 0:
            sep = " and " if i == len(fills) - 1 else ", "
            chunks.append(sep)
            pos += len(sep)
        chunks.append(fill.text)
        for entity, span, definite in fill.mentions:
            out.mentions.append((entity, Span(span.start + pos, span.end + pos), definite))
        for key, items in fill.marks.items():
            out.marks.setdefault(key, []).extend(
                (item, Span(s.start + pos, s.end + pos)) for item, s in items
            )
        pos += len(fill.text)
    out.text = "".join(chunks)
    return out


def apply_vocabulary_map(vocab: Vocabulary, vmap: dict) -> Vocabulary:
    """New vocabulary with surfaces replaced per the (bijective) map sections."""
    return replace(
        vocab,
        shapes={k: vmap.get("shapes", {}).get(k, v) for k, v in vocab.shapes.items()},
        colors={k: vmap.get("colors", {}).get(k, v) for k, v in vocab.colors.items()},
        sizes={k: vmap.get("sizes", {}).get(k, v) for k, v in vocab.sizes.items()},
        relations={k: vmap.get("relations", {}).get(k, v) for k, v in vocab.relations.items()},
    )


def load_vocabulary_map(path=None) -> dict:
    if path is None:
        with resources.files("spatialqa").joinpath("data/unseen_map.json").open("r") as fh:
            return json.load(fh)
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def map_grammar(grammar: Grammar, vmap: dict) -> Grammar:
    return replace(grammar, vocabulary=apply_vocabulary_map(grammar.vocabulary, vmap))
