"""Deterministic spatial-reasoning QA data generator with symbolic oracles."""

from .model import (
    GENERATOR_VERSION,
    Attribute,
    Block,
    Color,
    DatasetRecord,
    Fact,
    QType,
    Question,
    RelationKind,
    Scene,
    Shape,
    Size,
    Story,
    validate_scene,
)
from .algebra import EntailedSet, InconsistentFacts, Truth, all_relations, closure, relation_status

__version__ = GENERATOR_VERSION

__all__ = [
    "Attribute",
    "Block",
    "Color",
    "DatasetRecord",
    "EntailedSet",
    "Fact",
    "InconsistentFacts",
    "QType",
    "Question",
    "RelationKind",
    "Scene",
    "Shape",
    "Size",
    "Story",
    "Truth",
    "all_relations",
    "closure",
    "relation_status",
    "validate_scene",
    "__version__",
]
