"""Auxiliary supervision: per-story scene graphs and SpRL span annotations."""

from __future__ import annotations

from .model import (
    EDGE_KINDS,
    RelationKind,
    SceneGraph,
    SceneGraphEdge,
    SceneGraphNode,
    SprlTriplet,
    Story,
)


class AlignmentMissing(ValueError):
    """The story lacks the realization spans the annotator needs."""


def build_scene_graph(story: Story) -> SceneGraph:
    """Nodes for every described entity, edges for the stated facts only."""
    nodes = [SceneGraphNode(id=name, kind="block") for name in story.blocks]
    nodes.extend(
        SceneGraphNode(id=o.id, kind="object", attrs=o.attrs) for o in story.objects
    )
    edges = [
        SceneGraphEdge(source=f.subject, relation=f.relation, target=f.object, positive=f.positive)
        for f in story.facts
    ]
    return SceneGraph(nodes=tuple(nodes), edges=tuple(edges))


def emit_sprl(story: Story) -> list[SprlTriplet]:
    """One trajector/indicator/landmark triplet per verbalized relation.

    Conjunctive sentences yield several triplets; attribute-only sentences
    yield none. Raises AlignmentMissing when a sentence aligned to relation
    facts carries no spans to read them from.
    """
    triplets: list[SprlTriplet] = []
    relational = {f.key for f in story.facts}
    for index, sentence in enumerate(story.sentences):
        if sentence.fact_keys and not sentence.relation_spans:
            aligned = [k for k in sentence.fact_keys if k in relational]
            if aligned:
                raise AlignmentMissing(
                    f"sentence {index + 1} is aligned to facts but carries no spans"
                )
        for rs in sentence.relation_spans:
            triplets.append(
                SprlTriplet(
                    sentence_index=index,
                    fact_key=rs.fact_key,
                    trajector=rs.trajector,
                    indicator=rs.indicator,
                    landmark=rs.landmark,
                )
            )
    return triplets
