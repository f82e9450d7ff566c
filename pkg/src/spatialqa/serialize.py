"""Canonical JSON encoding for every on-disk type.

Encoding is stable: keys are emitted in sorted order with compact
separators, so equal records serialize to identical bytes. Decoding
validates shape and reports the JSON-path of the first offending field.
"""

from __future__ import annotations

import json
from typing import Any, Callable, Optional, TypeVar

from .model import (
    SCHEMA_VERSION,
    AnswerSet,
    Attribute,
    Block,
    Color,
    DatasetRecord,
    Descriptor,
    Fact,
    Justification,
    LogicalForm,
    Mention,
    ObjectInfo,
    Provenance,
    QType,
    Question,
    QuestionVariant,
    RelationKind,
    RelationSpan,
    Scene,
    SceneGraph,
    SceneGraphEdge,
    SceneGraphNode,
    Sentence,
    Shape,
    Size,
    Span,
    SpatialObject,
    SprlTriplet,
    Story,
    UnseenVariant,
    Variants,
)


class SchemaError(ValueError):
    """Malformed input; ``path`` points at the offending field."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


T = TypeVar("T")


def _ctx(path: str, value: Any, typ: type, what: str) -> Any:
    if not isinstance(value, typ) or (typ is not bool and isinstance(value, bool)):
        raise SchemaError(path, f"expected {what}, got {type(value).__name__}")
    return value


def _get(d: dict, path: str, key: str, required: bool = True) -> Any:
    if not isinstance(d, dict):
        raise SchemaError(path, "expected an object")
    if key not in d:
        if required:
            raise SchemaError(f"{path}.{key}", "missing field")
        return None
    return d[key]


def _enum(value: Any, enum_cls: Any, path: str) -> Any:
    try:
        return enum_cls(value)
    except ValueError:
        options = ", ".join(e.value for e in enum_cls)
        raise SchemaError(path, f"{value!r} is not one of: {options}") from None


def _num(value: Any, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(path, "expected a number")
    return float(value)


def _int(value: Any, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaError(path, "expected an integer")
    return value


def _str(value: Any, path: str) -> str:
    return _ctx(path, value, str, "a string")


def _list(value: Any, path: str) -> list:
    return _ctx(path, value, list, "an array")


# --------------------------------------------------------------------------- #
# encoders
# --------------------------------------------------------------------------- #


def attribute_to_dict(a: Attribute) -> dict:
    d: dict[str, Any] = {"shape": a.shape.value}
    if a.color is not None:
        d["color"] = a.color.value
    if a.size is not None:
        d["size"] = a.size.value
    return d


def fact_to_dict(f: Fact) -> dict:
    return {
        "subject": f.subject,
        "relation": f.relation.value,
        "object": f.object,
        "positive": f.positive,
    }


def scene_to_dict(s: Scene) -> dict:
    return {
        "blocks": [
            {
                "name": b.name,
                "bounds": list(b.bounds),
                "origin": list(b.origin),
                "objects": list(b.objects),
            }
            for b in s.blocks
        ],
        "objects": [
            {
                "id": o.id,
                "attrs": attribute_to_dict(o.attrs),
                "block": o.block_id,
                "position": list(o.position),
                "radius": o.radius,
            }
            for o in s.objects
        ],
        "block_relations": [fact_to_dict(f) for f in s.block_relations],
    }


def _span_to_list(sp: Span) -> list[int]:
    return [sp.start, sp.end]


def story_to_dict(st: Story) -> dict:
    return {
        "sentences": [
            {
                "text": s.text,
                "facts": list(s.fact_keys),
                "relation_spans": [
                    {
                        "fact": rs.fact_key,
                        "trajector": _span_to_list(rs.trajector),
                        "indicator": _span_to_list(rs.indicator),
                        "landmark": _span_to_list(rs.landmark),
                    }
                    for rs in s.relation_spans
                ],
                "mentions": [
                    {
                        "entity": m.entity,
                        "span": _span_to_list(m.span),
                        "definite": m.definite,
                    }
                    for m in s.mentions
                ],
            }
            for s in st.sentences
        ],
        "facts": [fact_to_dict(f) for f in st.facts],
        "blocks": list(st.blocks),
        "objects": [
            {
                "id": o.id,
                "attrs": attribute_to_dict(o.attrs),
                "block": o.block,
                "ordinal": o.ordinal,
            }
            for o in st.objects
        ],
        "token_count": st.token_count,
    }


def descriptor_to_dict(d: Descriptor) -> dict:
    out: dict[str, Any] = {
        "shape": d.shape,
        "color": d.color,
        "size": d.size,
        "hypernym": d.hypernym,
        "ordinal": d.ordinal,
        "count": d.count,
        "plural": d.plural,
        "definite": d.definite,
    }
    if d.rel_clause is not None:
        rel, inner = d.rel_clause
        out["rel_clause"] = {"relation": rel.value, "inner": descriptor_to_dict(inner)}
    else:
        out["rel_clause"] = None
    return out


def logical_form_to_dict(lf: LogicalForm) -> dict:
    return {
        "qtype": lf.qtype.value,
        "args": [descriptor_to_dict(d) for d in lf.args],
        "relation": lf.relation.value if lf.relation else None,
        "negated": lf.negated,
        "q1": lf.q1,
        "q2": lf.q2,
    }


def answer_to_dict(a: AnswerSet) -> dict:
    return {
        "labels": list(a.labels),
        "justification": [
            {"fact": fact_to_dict(j.fact), "depth": j.depth} for j in a.justification
        ],
        "vacuous": a.vacuous,
    }


def question_to_dict(q: Question) -> dict:
    return {
        "qtype": q.qtype.value,
        "text": q.text,
        "logical_form": logical_form_to_dict(q.logical_form),
        "candidates": list(q.candidates),
        "gold": answer_to_dict(q.gold) if q.gold else None,
        "reasoning_depth": q.reasoning_depth,
    }


def scene_graph_to_dict(g: SceneGraph) -> dict:
    return {
        "nodes": [
            {
                "id": n.id,
                "kind": n.kind,
                "attrs": attribute_to_dict(n.attrs) if n.attrs else None,
            }
            for n in g.nodes
        ],
        "edges": [
            {
                "source": e.source,
                "relation": e.relation.value,
                "target": e.target,
                "positive": e.positive,
            }
            for e in g.edges
        ],
    }


def sprl_to_dict(t: SprlTriplet) -> dict:
    return {
        "sentence": t.sentence_index,
        "fact": t.fact_key,
        "trajector": _span_to_list(t.trajector),
        "indicator": _span_to_list(t.indicator),
        "landmark": _span_to_list(t.landmark),
    }


def record_to_dict(r: DatasetRecord) -> dict:
    d: dict[str, Any] = {
        "schema_version": SCHEMA_VERSION,
        "record_id": r.record_id,
        "scene": scene_to_dict(r.scene),
        "story": story_to_dict(r.story),
        "questions": [question_to_dict(q) for q in r.questions],
        "scene_graph": scene_graph_to_dict(r.scene_graph),
        "sprl": [sprl_to_dict(t) for t in r.sprl],
        "provenance": {
            "seed": r.provenance.seed,
            "config_hash": r.provenance.config_hash,
            "generator_version": r.provenance.generator_version,
            "vocabulary": r.provenance.vocabulary,
        },
        "variants": None,
    }
    if r.variants is not None:
        v = r.variants
        d["variants"] = {
            "unseen": (
                {
                    "story": story_to_dict(v.unseen.story),
                    "questions": [question_to_dict(q) for q in v.unseen.questions],
                }
                if v.unseen
                else None
            ),
            "consistency": [
                {"parent": qv.parent_index, "question": question_to_dict(qv.question)}
                for qv in v.consistency
            ],
            "contrast": [
                {"parent": qv.parent_index, "question": question_to_dict(qv.question)}
                for qv in v.contrast
            ],
        }
    return d


def dumps(record: DatasetRecord) -> str:
    return json.dumps(record_to_dict(record), sort_keys=True, separators=(",", ":"))


# --------------------------------------------------------------------------- #
# decoders
# --------------------------------------------------------------------------- #


def attribute_from_dict(d: Any, path: str = "attrs") -> Attribute:
    shape = _enum(_get(d, path, "shape"), Shape, f"{path}.shape")
    color = d.get("color")
    size = d.get("size")
    return Attribute(
        shape=shape,
        color=_enum(color, Color, f"{path}.color") if color is not None else None,
        size=_enum(size, Size, f"{path}.size") if size is not None else None,
    )


def fact_from_dict(d: Any, path: str = "fact") -> Fact:
    try:
        return Fact(
            subject=_str(_get(d, path, "subject"), f"{path}.subject"),
            relation=_enum(_get(d, path, "relation"), RelationKind, f"{path}.relation"),
            object=_str(_get(d, path, "object"), f"{path}.object"),
            positive=bool(_get(d, path, "positive")),
        )
    except ValueError as exc:
        if isinstance(exc, SchemaError):
            raise
        raise SchemaError(path, str(exc)) from None


def _pair(value: Any, path: str) -> tuple[float, float]:
    items = _list(value, path)
    if len(items) != 2:
        raise SchemaError(path, "expected two numbers")
    return (_num(items[0], f"{path}[0]"), _num(items[1], f"{path}[1]"))


def scene_from_dict(d: Any, path: str = "scene") -> Scene:
    blocks = []
    for i, bd in enumerate(_list(_get(d, path, "blocks"), f"{path}.blocks")):
        bp = f"{path}.blocks[{i}]"
        blocks.append(
            Block(
                name=_str(_get(bd, bp, "name"), f"{bp}.name"),
                bounds=_pair(_get(bd, bp, "bounds"), f"{bp}.bounds"),
                origin=_pair(_get(bd, bp, "origin"), f"{bp}.origin"),
                objects=tuple(
                    _str(x, f"{bp}.objects[{j}]")
                    for j, x in enumerate(_list(_get(bd, bp, "objects"), f"{bp}.objects"))
                ),
            )
        )
    objects = []
    for i, od in enumerate(_list(_get(d, path, "objects"), f"{path}.objects")):
        op = f"{path}.objects[{i}]"
        objects.append(
            _spatial_object_from_dict(od, op)
        )
    rels = tuple(
        fact_from_dict(fd, f"{path}.block_relations[{i}]")
        for i, fd in enumerate(_list(_get(d, path, "block_relations"), f"{path}.block_relations"))
    )
    return Scene(blocks=tuple(blocks), objects=tuple(objects), block_relations=rels)


def _spatial_object_from_dict(od: Any, op: str) -> SpatialObject:
    return SpatialObject(
        id=_str(_get(od, op, "id"), f"{op}.id"),
        attrs=attribute_from_dict(_get(od, op, "attrs"), f"{op}.attrs"),
        block_id=_str(_get(od, op, "block"), f"{op}.block"),
        position=_pair(_get(od, op, "position"), f"{op}.position"),
        radius=_num(_get(od, op, "radius"), f"{op}.radius"),
    )


def _span_from(value: Any, path: str) -> Span:
    items = _list(value, path)
    if len(items) != 2:
        raise SchemaError(path, "expected [start, end]")
    return Span(_int(items[0], f"{path}[0]"), _int(items[1], f"{path}[1]"))


def story_from_dict(d: Any, path: str = "story") -> Story:
    sentences = []
    for i, sd in enumerate(_list(_get(d, path, "sentences"), f"{path}.sentences")):
        sp = f"{path}.sentences[{i}]"
        sentences.append(
            Sentence(
                text=_str(_get(sd, sp, "text"), f"{sp}.text"),
                fact_keys=tuple(
                    _str(x, f"{sp}.facts[{j}]")
                    for j, x in enumerate(_list(_get(sd, sp, "facts"), f"{sp}.facts"))
                ),
                relation_spans=tuple(
                    RelationSpan(
                        fact_key=_str(_get(rd, f"{sp}.relation_spans[{j}]", "fact"), f"{sp}.relation_spans[{j}].fact"),
                        trajector=_span_from(_get(rd, sp, "trajector"), f"{sp}.relation_spans[{j}].trajector"),
                        indicator=_span_from(_get(rd, sp, "indicator"), f"{sp}.relation_spans[{j}].indicator"),
                        landmark=_span_from(_get(rd, sp, "landmark"), f"{sp}.relation_spans[{j}].landmark"),
                    )
                    for j, rd in enumerate(_list(_get(sd, sp, "relation_spans"), f"{sp}.relation_spans"))
                ),
                mentions=tuple(
                    Mention(
                        entity=_str(_get(md, f"{sp}.mentions[{j}]", "entity"), f"{sp}.mentions[{j}].entity"),
                        span=_span_from(_get(md, sp, "span"), f"{sp}.mentions[{j}].span"),
                        definite=md.get("definite"),
                    )
                    for j, md in enumerate(_list(_get(sd, sp, "mentions"), f"{sp}.mentions"))
                ),
            )
        )
    facts = tuple(
        fact_from_dict(fd, f"{path}.facts[{i}]")
        for i, fd in enumerate(_list(_get(d, path, "facts"), f"{path}.facts"))
    )
    objects = []
    for i, od in enumerate(_list(_get(d, path, "objects"), f"{path}.objects")):
        op = f"{path}.objects[{i}]"
        block = od.get("block")
        ordinal = od.get("ordinal")
        objects.append(
            ObjectInfo(
                id=_str(_get(od, op, "id"), f"{op}.id"),
                attrs=attribute_from_dict(_get(od, op, "attrs"), f"{op}.attrs"),
                block=_str(block, f"{op}.block") if block is not None else None,
                ordinal=_int(ordinal, f"{op}.ordinal") if ordinal is not None else None,
            )
        )
    return Story(
        sentences=tuple(sentences),
        facts=facts,
        blocks=tuple(
            _str(x, f"{path}.blocks[{i}]")
            for i, x in enumerate(_list(_get(d, path, "blocks"), f"{path}.blocks"))
        ),
        objects=tuple(objects),
    )


def descriptor_from_dict(d: Any, path: str) -> Descriptor:
    rel_clause = None
    rc = d.get("rel_clause")
    if rc is not None:
        rel = _enum(_get(rc, f"{path}.rel_clause", "relation"), RelationKind, f"{path}.rel_clause.relation")
        rel_clause = (rel, descriptor_from_dict(_get(rc, f"{path}.rel_clause", "inner"), f"{path}.rel_clause.inner"))
    try:
        return Descriptor(
            shape=d.get("shape"),
            color=d.get("color"),
            size=d.get("size"),
            hypernym=d.get("hypernym"),
            ordinal=d.get("ordinal"),
            count=d.get("count"),
            plural=bool(d.get("plural", False)),
            definite=bool(d.get("definite", True)),
            rel_clause=rel_clause,
        )
    except ValueError as exc:
        raise SchemaError(path, str(exc)) from None


def logical_form_from_dict(d: Any, path: str) -> LogicalForm:
    rel = d.get("relation")
    return LogicalForm(
        qtype=_enum(_get(d, path, "qtype"), QType, f"{path}.qtype"),
        args=tuple(
            descriptor_from_dict(ad, f"{path}.args[{i}]")
            for i, ad in enumerate(_list(_get(d, path, "args"), f"{path}.args"))
        ),
        relation=_enum(rel, RelationKind, f"{path}.relation") if rel is not None else None,
        negated=bool(d.get("negated", False)),
        q1=d.get("q1"),
        q2=d.get("q2"),
    )


def answer_from_dict(d: Any, path: str) -> AnswerSet:
    labels = tuple(
        _str(x, f"{path}.labels[{i}]")
        for i, x in enumerate(_list(_get(d, path, "labels"), f"{path}.labels"))
    )
    just = tuple(
        Justification(
            fact=fact_from_dict(_get(jd, f"{path}.justification[{i}]", "fact"), f"{path}.justification[{i}].fact"),
            depth=_int(_get(jd, f"{path}.justification[{i}]", "depth"), f"{path}.justification[{i}].depth"),
        )
        for i, jd in enumerate(_list(_get(d, path, "justification"), f"{path}.justification"))
    )
    try:
        return AnswerSet(labels=labels, justification=just, vacuous=bool(d.get("vacuous", False)))
    except ValueError as exc:
        raise SchemaError(path, str(exc)) from None


def question_from_dict(d: Any, path: str) -> Question:
    gold = d.get("gold")
    return Question(
        qtype=_enum(_get(d, path, "qtype"), QType, f"{path}.qtype"),
        text=_str(_get(d, path, "text"), f"{path}.text"),
        logical_form=logical_form_from_dict(_get(d, path, "logical_form"), f"{path}.logical_form"),
        candidates=tuple(
            _str(x, f"{path}.candidates[{i}]")
            for i, x in enumerate(_list(_get(d, path, "candidates"), f"{path}.candidates"))
        ),
        gold=answer_from_dict(gold, f"{path}.gold") if gold is not None else None,
        reasoning_depth=_int(d.get("reasoning_depth", 0), f"{path}.reasoning_depth"),
    )


def scene_graph_from_dict(d: Any, path: str) -> SceneGraph:
    nodes = []
    for i, nd in enumerate(_list(_get(d, path, "nodes"), f"{path}.nodes")):
        np_ = f"{path}.nodes[{i}]"
        attrs = nd.get("attrs")
        nodes.append(
            SceneGraphNode(
                id=_str(_get(nd, np_, "id"), f"{np_}.id"),
                kind=_str(_get(nd, np_, "kind"), f"{np_}.kind"),
                attrs=attribute_from_dict(attrs, f"{np_}.attrs") if attrs is not None else None,
            )
        )
    edges = []
    for i, ed in enumerate(_list(_get(d, path, "edges"), f"{path}.edges")):
        ep = f"{path}.edges[{i}]"
        edges.append(
            SceneGraphEdge(
                source=_str(_get(ed, ep, "source"), f"{ep}.source"),
                relation=_enum(_get(ed, ep, "relation"), RelationKind, f"{ep}.relation"),
                target=_str(_get(ed, ep, "target"), f"{ep}.target"),
                positive=bool(_get(ed, ep, "positive")),
            )
        )
    return SceneGraph(nodes=tuple(nodes), edges=tuple(edges))


def sprl_from_dict(d: Any, path: str) -> SprlTriplet:
    return SprlTriplet(
        sentence_index=_int(_get(d, path, "sentence"), f"{path}.sentence"),
        fact_key=_str(_get(d, path, "fact"), f"{path}.fact"),
        trajector=_span_from(_get(d, path, "trajector"), f"{path}.trajector"),
        indicator=_span_from(_get(d, path, "indicator"), f"{path}.indicator"),
        landmark=_span_from(_get(d, path, "landmark"), f"{path}.landmark"),
    )


def record_from_dict(d: Any, path: str = "record") -> DatasetRecord:
    version = _int(_get(d, path, "schema_version"), f"{path}.schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaError(f"{path}.schema_version", f"unsupported version {version}")
    pd = _get(d, path, "provenance")
    provenance = Provenance(
        seed=_int(_get(pd, f"{path}.provenance", "seed"), f"{path}.provenance.seed"),
        config_hash=_str(_get(pd, f"{path}.provenance", "config_hash"), f"{path}.provenance.config_hash"),
        generator_version=_str(
            _get(pd, f"{path}.provenance", "generator_version"), f"{path}.provenance.generator_version"
        ),
        vocabulary=_str(_get(pd, f"{path}.provenance", "vocabulary"), f"{path}.provenance.vocabulary"),
    )
    variants = None
    vd = d.get("variants")
    if vd is not None:
        ud = vd.get("unseen")
        unseen = None
        if ud is not None:
            unseen = UnseenVariant(
                story=story_from_dict(_get(ud, f"{path}.variants.unseen", "story"), f"{path}.variants.unseen.story"),
                questions=tuple(
                    question_from_dict(qd, f"{path}.variants.unseen.questions[{i}]")
                    for i, qd in enumerate(
                        _list(_get(ud, f"{path}.variants.unseen", "questions"), f"{path}.variants.unseen.questions")
                    )
                ),
            )
        variants = Variants(
            unseen=unseen,
            consistency=tuple(
                QuestionVariant(
                    parent_index=_int(_get(qv, f"{path}.variants.consistency[{i}]", "parent"), f"{path}.variants.consistency[{i}].parent"),
                    kind="consistency",
                    question=question_from_dict(_get(qv, f"{path}.variants.consistency[{i}]", "question"), f"{path}.variants.consistency[{i}].question"),
                )
                for i, qv in enumerate(_list(_get(vd, f"{path}.variants", "consistency"), f"{path}.variants.consistency"))
            ),
            contrast=tuple(
                QuestionVariant(
                    parent_index=_int(_get(qv, f"{path}.variants.contrast[{i}]", "parent"), f"{path}.variants.contrast[{i}].parent"),
                    kind="contrast",
                    question=question_from_dict(_get(qv, f"{path}.variants.contrast[{i}]", "question"), f"{path}.variants.contrast[{i}].question"),
                )
                for i, qv in enumerate(_list(_get(vd, f"{path}.variants", "contrast"), f"{path}.variants.contrast"))
            ),
        )
    return DatasetRecord(
        record_id=_str(_get(d, path, "record_id"), f"{path}.record_id"),
        scene=scene_from_dict(_get(d, path, "scene"), f"{path}.scene"),
        story=story_from_dict(_get(d, path, "story"), f"{path}.story"),
        questions=tuple(
            question_from_dict(qd, f"{path}.questions[{i}]")
            for i, qd in enumerate(_list(_get(d, path, "questions"), f"{path}.questions"))
        ),
        scene_graph=scene_graph_from_dict(_get(d, path, "scene_graph"), f"{path}.scene_graph"),
        sprl=tuple(
            sprl_from_dict(td, f"{path}.sprl[{i}]")
            for i, td in enumerate(_list(_get(d, path, "sprl"), f"{path}.sprl"))
        ),
        provenance=provenance,
        variants=variants,
    )


def loads(line: str) -> DatasetRecord:
    try:
        data = json.loads(line)
    except json.JSONDecodeError as exc:
        raise SchemaError("record", f"invalid JSON: {exc}") from None
    return record_from_dict(data)
