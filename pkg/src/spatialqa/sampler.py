"""Seeded synthesis of ground-truth scenes and geometric fact extraction.

Blocks live on a 2x2 grid of unit cells separated by a fixed gap, which
makes every lifted cross-block directional fact strictly true in global
coordinates. Objects are placed by rejection sampling; tangency (to another
object or to a block border) is only ever produced on purpose.
"""

from __future__ import annotations

import hashlib
import json
import math
import random
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional

from .model import (
    Attribute,
    Block,
    Color,
    EDGE_KINDS,
    Edge,
    Fact,
    RelationKind,
    Scene,
    Shape,
    Size,
    SpatialObject,
    validate_scene,
)
from .serialize import SchemaError, scene_from_dict, scene_to_dict

R = RelationKind

#: Center-to-center spacing of grid cells; the 0.2 gap between unit blocks
#: keeps cross-block coordinate comparisons strict.
_CELL_PITCH = 1.2

_RADIUS_BY_SIZE = {Size.SMALL: 0.06, Size.MEDIUM: 0.10, Size.BIG: 0.14}
_DEFAULT_RADIUS = 0.10

_BLOCK_NAMES = "ABCD"


class PlacementFailure(RuntimeError):
    """Rejection sampling ran out of retries while placing objects."""


def derive_seed(*parts: object) -> int:
    """Stable sub-seed derivation; independent of platform hash randomization."""
    text = "\x1f".join(str(p) for p in parts)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


@dataclass(frozen=True)
class SamplerConfig:
    block_count: tuple[int, int] = (2, 3)
    objects_per_block: tuple[int, int] = (1, 4)
    shapes: tuple[Shape, ...] = tuple(Shape)
    colors: tuple[Color, ...] = tuple(Color)
    sizes: tuple[Size, ...] = tuple(Size)
    color_prob: float = 0.75
    size_prob: float = 0.6
    duplicate_attr_prob: float = 0.2
    edge_touch_prob: float = 0.15
    pair_touch_prob: float = 0.15
    touch_epsilon: float = 0.01
    near_ratio: float = 0.25
    far_ratio: float = 0.72
    direction_margin: float = 0.05
    describe_fraction: float = 0.8
    max_place_tries: int = 1000
    seed: int = 0

    def __post_init__(self) -> None:
        if self.block_count[0] < 1 or self.block_count[0] > self.block_count[1]:
            raise ValueError("block_count range is empty")
        if self.block_count[1] > len(_BLOCK_NAMES):
            raise ValueError(f"at most {len(_BLOCK_NAMES)} blocks supported")
        if self.objects_per_block[0] < 0 or self.objects_per_block[0] > self.objects_per_block[1]:
            raise ValueError("objects_per_block range is empty")
        if not 0 < self.near_ratio < self.far_ratio:
            raise ValueError("need 0 < near_ratio < far_ratio")
        if not 0 < self.describe_fraction <= 1:
            raise ValueError("describe_fraction must be in (0, 1]")


def _radius(size: Optional[Size]) -> float:
    return _RADIUS_BY_SIZE[size] if size else _DEFAULT_RADIUS


def _extends(a: Attribute, b: Attribute) -> bool:
    """a strictly extends b: same where b is stated, and a states more."""
    if a == b or a.shape is not b.shape:
        return False
    for mine, theirs in ((a.color, b.color), (a.size, b.size)):
        if theirs is not None and mine is not theirs:
            return False
    return True


def _sample_attrs(rng: random.Random, cfg: SamplerConfig, existing: list[Attribute]) -> Attribute:
    """Attributes that are either equal to an existing set or incomparable.

    Barring strict-extension pairs ("a square" next to "a blue square") keeps
    every definite mention resolvable; exact duplicates are fine because the
    story numbers them.
    """
    if existing and rng.random() < cfg.duplicate_attr_prob:
        return rng.choice(existing)
    for _ in range(50):
        attrs = Attribute(
            shape=rng.choice(cfg.shapes),
            color=rng.choice(cfg.colors) if rng.random() < cfg.color_prob else None,
            size=rng.choice(cfg.sizes) if rng.random() < cfg.size_prob else None,
        )
        if not any(_extends(attrs, e) or _extends(e, attrs) for e in existing):
            return attrs
    return rng.choice(existing)


def _grid_relation(rng: random.Random, cell_a: tuple[int, int], cell_b: tuple[int, int]) -> RelationKind:
    """One directional relation per block pair, read off the grid cells."""
    (row_a, col_a), (row_b, col_b) = cell_a, cell_b
    horizontal = R.LEFT if col_a < col_b else R.RIGHT
    vertical = R.ABOVE if row_a > row_b else R.BELOW
    if row_a == row_b:
        return horizontal
    if col_a == col_b:
        return vertical
    return rng.choice([horizontal, vertical])


def _place_objects(
    rng: random.Random,
    cfg: SamplerConfig,
    block: Block,
    count: int,
    next_id: int,
    attrs_pool: list[Attribute],
) -> list[SpatialObject]:
    w, h = block.bounds
    eps = cfg.touch_epsilon
    placed: list[SpatialObject] = []
    for k in range(count):
        attrs = _sample_attrs(rng, cfg, attrs_pool)
        r = _radius(attrs.size)
        for attempt in range(cfg.max_place_tries):
            mode = rng.random()
            tangent_to: Optional[SpatialObject] = None
            if mode < cfg.edge_touch_prob:
                edge = rng.choice(list(Edge))
                if edge is Edge.LEFT:
                    x, y = r, rng.uniform(r + 2 * eps, h - r - 2 * eps)
                elif edge is Edge.RIGHT:
                    x, y = w - r, rng.uniform(r + 2 * eps, h - r - 2 * eps)
                elif edge is Edge.BOTTOM:
                    x, y = rng.uniform(r + 2 * eps, w - r - 2 * eps), r
                else:
                    x, y = rng.uniform(r + 2 * eps, w - r - 2 * eps), h - r
            elif placed and mode < cfg.edge_touch_prob + cfg.pair_touch_prob:
                tangent_to = rng.choice(placed)
                angle = rng.uniform(0, 6.283185307179586)
                dist = tangent_to.radius + r
                x = tangent_to.position[0] + dist * math.cos(angle)
                y = tangent_to.position[1] + dist * math.sin(angle)
                if not (r + 2 * eps <= x <= w - r - 2 * eps and r + 2 * eps <= y <= h - r - 2 * eps):
                    continue
            else:
                x = rng.uniform(r + 2 * eps, w - r - 2 * eps)
                y = rng.uniform(r + 2 * eps, h - r - 2 * eps)
            ok = True
            for other in placed:
                if tangent_to is not None and other.id == tangent_to.id:
                    continue
                dx = x - other.position[0]
                dy = y - other.position[1]
                gap = (dx * dx + dy * dy) ** 0.5 - (r + other.radius)
                if gap <= 2 * eps:
                    ok = False
                    break
            if ok:
                placed.append(
                    SpatialObject(
                        id=f"o{next_id + k}",
                        attrs=attrs,
                        block_id=block.name,
                        position=(x, y),
                        radius=r,
                    )
                )
                attrs_pool.append(attrs)
                break
        else:
            raise PlacementFailure(
                f"could not place object {k + 1}/{count} in block {block.name} "
                f"after {cfg.max_place_tries} tries (seed {cfg.seed})"
            )
    return placed


def sample_scene(cfg: SamplerConfig) -> Scene:
    """Draw a random scene; identical configs (including seed) give identical scenes."""
    rng = random.Random(derive_seed("scene", cfg.seed))
    n_blocks = rng.randint(*cfg.block_count)
    cells = rng.sample([(0, 0), (0, 1), (1, 0), (1, 1)], n_blocks)
    blocks: list[Block] = []
    objects: list[SpatialObject] = []
    attrs_pool: list[Attribute] = []
    for i in range(n_blocks):
        row, col = cells[i]
        block = Block(
            name=_BLOCK_NAMES[i],
            bounds=(1.0, 1.0),
            origin=(col * _CELL_PITCH, row * _CELL_PITCH),
        )
        count = rng.randint(*cfg.objects_per_block)
        placed = _place_objects(rng, cfg, block, count, len(objects) + 1, attrs_pool)
        objects.extend(placed)
        blocks.append(replace(block, objects=tuple(o.id for o in placed)))

    relations = []
    for i in range(n_blocks):
        for j in range(i + 1, n_blocks):
            rel = _grid_relation(rng, cells[i], cells[j])
            relations.append(Fact(blocks[i].name, rel, blocks[j].name))

    scene = Scene(blocks=tuple(blocks), objects=tuple(objects), block_relations=tuple(relations))
    problems = validate_scene(scene)
    if problems:
        raise PlacementFailure("sampled scene failed validation: " + "; ".join(problems))
    return scene


def extract_geometric_facts(scene: Scene, cfg: SamplerConfig) -> list[Fact]:
    """Read every stated-fact candidate off the ground-truth geometry.

    Directional and symmetric facts between same-block object pairs are
    emitted in both directions (the converse pair), matching how either
    direction may be verbalized later.
    """
    facts: list[Fact] = []
    eps = cfg.touch_epsilon
    for block in scene.blocks:
        members = [scene.object_by_id(oid) for oid in block.objects]
        w, h = block.bounds
        margin = cfg.direction_margin * w
        near_cut = cfg.near_ratio * w
        far_cut = cfg.far_ratio * w
        for obj in members:
            facts.append(Fact(obj.id, R.IN, block.name))
            x, y = obj.position
            if x - obj.radius <= eps:
                facts.append(Fact(obj.id, R.TOUCHING_LEFT, block.name))
            if w - (x + obj.radius) <= eps:
                facts.append(Fact(obj.id, R.TOUCHING_RIGHT, block.name))
            if y - obj.radius <= eps:
                facts.append(Fact(obj.id, R.TOUCHING_BOTTOM, block.name))
            if h - (y + obj.radius) <= eps:
                facts.append(Fact(obj.id, R.TOUCHING_TOP, block.name))
        for i, a in enumerate(members):
            for b in members[i + 1 :]:
                ax, ay = a.position
                bx, by = b.position
                if ax + margin < bx:
                    facts.append(Fact(a.id, R.LEFT, b.id))
                    facts.append(Fact(b.id, R.RIGHT, a.id))
                elif bx + margin < ax:
                    facts.append(Fact(b.id, R.LEFT, a.id))
                    facts.append(Fact(a.id, R.RIGHT, b.id))
                if ay > by + margin:
                    facts.append(Fact(a.id, R.ABOVE, b.id))
                    facts.append(Fact(b.id, R.BELOW, a.id))
                elif by > ay + margin:
                    facts.append(Fact(b.id, R.ABOVE, a.id))
                    facts.append(Fact(a.id, R.BELOW, b.id))
                dist = ((ax - bx) ** 2 + (ay - by) ** 2) ** 0.5
                if dist <= near_cut:
                    facts.append(Fact(a.id, R.NEAR, b.id))
                    facts.append(Fact(b.id, R.NEAR, a.id))
                elif dist >= far_cut:
                    facts.append(Fact(a.id, R.FAR, b.id))
                    facts.append(Fact(b.id, R.FAR, a.id))
                if dist - (a.radius + b.radius) <= eps:
                    facts.append(Fact(a.id, R.TOUCHING, b.id))
                    facts.append(Fact(b.id, R.TOUCHING, a.id))
    for f in scene.block_relations:
        facts.append(f)
        facts.append(f.flipped())
    return facts


def select_story_facts(facts: list[Fact], cfg: SamplerConfig) -> list[Fact]:
    """Choose the stated subset the story will verbalize.

    Containment facts of every kept object always survive, which anchors each
    described object to a described entity; with describe_fraction == 1 the
    output is the input unchanged.
    """
    if cfg.describe_fraction >= 1.0:
        return list(facts)
    rng = random.Random(derive_seed("select", cfg.seed))
    blocks = sorted({f.object for f in facts if f.relation is R.IN})
    blocks += sorted(
        {e for f in facts for e in (f.subject, f.object) if len(e) == 1 and e.isupper() and e not in blocks}
    )
    kept_blocks = [b for b in blocks if rng.random() < cfg.describe_fraction]
    if not kept_blocks and blocks:
        kept_blocks = [rng.choice(blocks)]
    kept_block_set = set(kept_blocks)

    members: dict[str, str] = {}
    for f in facts:
        if f.relation is R.IN and f.positive:
            members[f.subject] = f.object
    objs = sorted(o for o, b in members.items() if b in kept_block_set)
    kept_objects = {o for o in objs if rng.random() < cfg.describe_fraction}
    if not kept_objects and objs:
        kept_objects = {rng.choice(objs)}

    def entity_ok(ref: str) -> bool:
        if ref in kept_block_set:
            return True
        return ref in kept_objects

    out: list[Fact] = []
    all_keys = {f.key for f in facts}
    seen_groups: set[frozenset[str]] = set()
    for f in facts:
        if not entity_ok(f.subject) or not entity_ok(f.object):
            continue
        if f.relation is R.IN:
            out.append(f)
            continue
        if f.relation in EDGE_KINDS:
            if rng.random() < cfg.describe_fraction:
                out.append(f)
            continue
        # keep or drop a converse pair as one unit so neither a lone flipped
        # duplicate nor a contradictory subset can arise
        group = frozenset({f.key, f.flipped().key}) if f.relation in {R.LEFT, R.RIGHT, R.ABOVE, R.BELOW, R.NEAR, R.FAR, R.TOUCHING} else frozenset({f.key})
        if group in seen_groups:
            continue
        seen_groups.add(group)
        if rng.random() < cfg.describe_fraction:
            out.append(f)
            flipped = f.flipped()
            if flipped.key in all_keys:
                out.append(flipped)
    return out


def import_scene(source) -> Scene:
    """Load a scene from a JSON file path, file object, or parsed dict.

    Raises SchemaError naming the offending field on malformed input.
    """
    if isinstance(source, dict):
        data = source
    elif hasattr(source, "read"):
        data = json.load(source)
    else:
        with open(source, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    scene = scene_from_dict(data, "scene")
    problems = validate_scene(scene)
    if problems:
        raise SchemaError("scene", "; ".join(problems))
    return scene


def export_scene(scene: Scene) -> dict:
    return scene_to_dict(scene)
