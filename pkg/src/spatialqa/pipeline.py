"""End-to-end dataset generation, statistics, and verification.

Generation is deterministic: every record's seed derives from (master seed,
split name, record index), and record construction consumes randomness only
through generators seeded from that value. Stories outside the configured
length band are resampled with derived attempt seeds, so the emitted corpus
is reproducible byte for byte.
"""

from __future__ import annotations

import hashlib
import json
import logging
import random
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional

from .annotate import build_scene_graph, emit_sprl
from .answers import answer_question
from .grammar import Grammar, load_grammar, load_vocabulary_map, map_grammar
from .model import (
    DatasetRecord,
    Provenance,
    QType,
    Question,
    QuestionVariant,
    Story,
    UnseenVariant,
    Variants,
    tokenize,
)
from .parsing import canonical_facts, parse_question, parse_story
from .questions import (
    NoValidSelection,
    QuestionConfig,
    StoryModel,
    make_question,
)
from .realizer import realize_story, universe_from_scene
from .sampler import (
    PlacementFailure,
    SamplerConfig,
    derive_seed,
    extract_geometric_facts,
    sample_scene,
    select_story_facts,
)
from .serialize import SchemaError, dumps, loads
from .variants import NoVariant, make_consistency, make_contrast, make_unseen

log = logging.getLogger("spatialqa")

SPLITS = ("train", "dev", "test_seen", "test_unseen")


class GenerationError(RuntimeError):
    def __init__(self, split: str, index: int, seed: int, cause: Exception):
        self.record_seed = seed
        super().__init__(f"record {split}[{index}] (seed {seed}): {cause}")


@dataclass(frozen=True)
class StoryBand:
    """Acceptance window a story must fall into before questions are asked."""

    min_sentences: int = 4
    max_sentences: int = 14
    min_tokens: int = 66
    max_tokens: int = 186
    min_objects: int = 4
    max_attempts: int = 80

    def admits(self, story: Story) -> bool:
        return (
            self.min_sentences <= len(story.sentences) <= self.max_sentences
            and self.min_tokens <= story.token_count <= self.max_tokens
            and len(story.objects) >= self.min_objects
        )


@dataclass(frozen=True)
class PipelineConfig:
    master_seed: int = 0
    counts: dict = field(default_factory=lambda: {"train": 8, "dev": 2, "test_seen": 2, "test_unseen": 2})
    questions_per_story: int = 8
    unseen_fraction: float = 1.0
    touching_implies_near: bool = True
    sampler: SamplerConfig = SamplerConfig()
    question: QuestionConfig = QuestionConfig()
    band: StoryBand = StoryBand()
    variants: dict = field(default_factory=lambda: {"consistency": ["test_seen"], "contrast": ["test_seen"], "unseen": []})
    max_variants_per_question: int = 2
    grammar_path: Optional[str] = None
    vocabulary_map_path: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "master_seed": self.master_seed,
            "counts": {k: self.counts.get(k, 0) for k in SPLITS},
            "questions_per_story": self.questions_per_story,
            "unseen_fraction": self.unseen_fraction,
            "touching_implies_near": self.touching_implies_near,
            "sampler": asdict(self.sampler),
            "question": asdict(self.question),
            "band": asdict(self.band),
            "variants": {k: sorted(self.variants.get(k, [])) for k in ("consistency", "contrast", "unseen")},
            "max_variants_per_question": self.max_variants_per_question,
            "grammar_path": self.grammar_path,
            "vocabulary_map_path": self.vocabulary_map_path,
        }

    def hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def _tupled(value, fallback):
    if value is None:
        return fallback
    return tuple(value)


def config_from_dict(data: dict) -> PipelineConfig:
    base = PipelineConfig()
    sampler_data = dict(data.get("sampler", {}))
    for key in ("block_count", "objects_per_block"):
        if key in sampler_data:
            sampler_data[key] = tuple(sampler_data[key])
    for key in ("shapes", "colors", "sizes"):
        sampler_data.pop(key, None)  # vocabulary enums are fixed
    question_data = dict(data.get("question", {}))
    for key in ("yn_mode_weights", "yn_pick_weights"):
        if key in question_data:
            question_data[key] = tuple(question_data[key])
    return PipelineConfig(
        master_seed=data.get("master_seed", base.master_seed),
        counts={**base.counts, **data.get("counts", {})},
        questions_per_story=data.get("questions_per_story", base.questions_per_story),
        unseen_fraction=data.get("unseen_fraction", base.unseen_fraction),
        touching_implies_near=data.get("touching_implies_near", base.touching_implies_near),
        sampler=replace(base.sampler, **sampler_data),
        question=replace(base.question, **question_data),
        band=replace(base.band, **data.get("band", {})),
        variants={**base.variants, **data.get("variants", {})},
        max_variants_per_question=data.get("max_variants_per_question", base.max_variants_per_question),
        grammar_path=data.get("grammar_path"),
        vocabulary_map_path=data.get("vocabulary_map_path"),
    )


def load_config(path: Optional[str]) -> PipelineConfig:
    if path is None:
        return PipelineConfig()
    with open(path, "r", encoding="utf-8") as fh:
        return config_from_dict(json.load(fh))


# --------------------------------------------------------------------------- #
# record construction
# --------------------------------------------------------------------------- #


def _qtype_plan(count: int, rng: random.Random) -> list[QType]:
    order = [QType.FR, QType.FB, QType.CO, QType.YN]
    plan = [order[i % 4] for i in range(count)]
    rng.shuffle(plan)
    return plan


def build_record(
    config: PipelineConfig,
    grammar: Grammar,
    split: str,
    index: int,
) -> DatasetRecord:
    seed = derive_seed(config.master_seed, split, index)
    try:
        return _build_record_inner(config, grammar, split, index, seed)
    except Exception as exc:  # fail fast, naming the record seed
        if isinstance(exc, GenerationError):
            raise
        raise GenerationError(split, index, seed, exc) from exc


def _build_record_inner(
    config: PipelineConfig, grammar: Grammar, split: str, index: int, seed: int
) -> DatasetRecord:
    band = config.band
    scene = story = None
    for attempt in range(band.max_attempts):
        scfg = replace(config.sampler, seed=derive_seed(seed, "scene", attempt))
        try:
            candidate_scene = sample_scene(scfg)
        except PlacementFailure:
            continue
        facts = extract_geometric_facts(candidate_scene, scfg)
        selected = select_story_facts(facts, scfg)
        candidate = realize_story(
            selected,
            universe_from_scene(candidate_scene),
            grammar,
            derive_seed(seed, "story", attempt),
        )
        if band.admits(candidate):
            scene, story = candidate_scene, candidate
            break
    if story is None:
        raise GenerationError(
            split, index, seed, RuntimeError(f"no story fit the band in {band.max_attempts} attempts")
        )

    model = StoryModel.from_story(story, config.touching_implies_near)
    rng = random.Random(derive_seed(seed, "questions"))
    questions: list[Question] = []
    for qtype in _qtype_plan(config.questions_per_story, rng):
        question = None
        for fallback in (qtype, QType.YN):
            try:
                question = make_question(fallback, model, grammar, rng, config.question)
                break
            except NoValidSelection:
                continue
        if question is None:
            continue
        questions.append(answer_question(question, model))

    consistency: list[QuestionVariant] = []
    contrast: list[QuestionVariant] = []
    if split in config.variants.get("consistency", []):
        for qi, q in enumerate(questions):
            try:
                items = make_consistency(q, q.gold, model, grammar)
            except NoVariant:
                continue
            for vq, _ in items[: config.max_variants_per_question]:
                consistency.append(QuestionVariant(parent_index=qi, kind="consistency", question=vq))
    if split in config.variants.get("contrast", []):
        for qi, q in enumerate(questions):
            try:
                items = make_contrast(q, q.gold, model, grammar)
            except NoVariant:
                continue
            for vq, _ in items[: config.max_variants_per_question]:
                contrast.append(QuestionVariant(parent_index=qi, kind="contrast", question=vq))

    variants = None
    if consistency or contrast:
        variants = Variants(consistency=tuple(consistency), contrast=tuple(contrast))

    record = DatasetRecord(
        record_id=f"{split}-{index:06d}",
        scene=scene,
        story=story,
        questions=tuple(questions),
        scene_graph=build_scene_graph(story),
        sprl=tuple(emit_sprl(story)),
        provenance=Provenance(seed=seed, config_hash=config.hash()),
        variants=variants,
    )

    if split == "test_unseen" or split in config.variants.get("unseen", []):
        vmap = load_vocabulary_map(config.vocabulary_map_path)
        transformed = make_unseen(
            record, vmap, config.unseen_fraction, derive_seed(seed, "unseen"), grammar
        )
        if split == "test_unseen":
            record = transformed
        else:
            record = replace(
                record,
                variants=Variants(
                    unseen=UnseenVariant(story=transformed.story, questions=transformed.questions),
                    consistency=record.variants.consistency if record.variants else (),
                    contrast=record.variants.contrast if record.variants else (),
                ),
            )
    return record


# --------------------------------------------------------------------------- #
# generate
# --------------------------------------------------------------------------- #


def generate(config: PipelineConfig, out_dir) -> dict:
    """Write one JSONL file per split plus a manifest; returns the manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    grammar = load_grammar(config.grammar_path)
    manifest: dict = {
        "generator_version": Provenance(0, "").generator_version,
        "config": config.to_dict(),
        "config_hash": config.hash(),
        "splits": {},
    }
    for split in SPLITS:
        count = config.counts.get(split, 0)
        path = out / f"{split}.jsonl"
        qtype_counts = {qt.value: 0 for qt in QType}
        label_hist: dict[str, dict[str, int]] = {qt.value: {} for qt in QType}
        sentence_counts: list[int] = []
        token_counts: list[int] = []
        question_tokens: list[int] = []
        n_questions = 0
        with path.open("w", encoding="utf-8") as fh:
            for index in range(count):
                record = build_record(config, grammar, split, index)
                fh.write(dumps(record))
                fh.write("\n")
                sentence_counts.append(len(record.story.sentences))
                token_counts.append(record.story.token_count)
                for q in record.questions:
                    qtype_counts[q.qtype.value] += 1
                    n_questions += 1
                    question_tokens.append(len(tokenize(q.text)))
                    for label in q.gold.labels:
                        hist = label_hist[q.qtype.value]
                        hist[label] = hist.get(label, 0) + 1
        manifest["splits"][split] = {
            "records": count,
            "questions": n_questions,
            "questions_per_qtype": qtype_counts,
            "label_histogram": {k: dict(sorted(v.items())) for k, v in label_hist.items()},
            "story_sentences": _summary(sentence_counts),
            "story_tokens": _summary(token_counts),
            "question_tokens": _summary(question_tokens),
        }
        log.info("wrote %s (%d records, %d questions)", path, count, n_questions)
    manifest_path = out / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return manifest


def _summary(values: list[int]) -> dict:
    if not values:
        return {"count": 0, "min": 0, "max": 0, "mean": 0.0}
    return {
        "count": len(values),
        "min": min(values),
        "max": max(values),
        "mean": round(sum(values) / len(values), 3),
    }


# --------------------------------------------------------------------------- #
# stats
# --------------------------------------------------------------------------- #

#: Reference bands for the default corpus shape.
REFERENCE = {
    "story_sentences": {"min": 3, "max": 22, "mean": 9.0, "mean_tol": 0.25},
    "story_tokens": {"min": 66, "max": 274, "mean": 118.0, "mean_tol": 0.25},
    "question_tokens": {"min": 6, "max": 57, "mean": 23.0, "mean_tol": 0.25},
}


def iter_records(path):
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                yield loads(line)
            except SchemaError as exc:
                raise SchemaError(f"line {line_no}", str(exc)) from None


def stats(path) -> dict:
    sentence_counts: list[int] = []
    token_counts: list[int] = []
    question_tokens: list[int] = []
    qtype_counts: dict[str, int] = {qt.value: 0 for qt in QType}
    label_hist: dict[str, dict[str, int]] = {qt.value: {} for qt in QType}
    depth_hist: dict[int, int] = {}
    records = 0
    for record in iter_records(path):
        records += 1
        sentence_counts.append(len(record.story.sentences))
        token_counts.append(record.story.token_count)
        for q in record.questions:
            qtype_counts[q.qtype.value] += 1
            question_tokens.append(len(tokenize(q.text)))
            depth_hist[q.reasoning_depth] = depth_hist.get(q.reasoning_depth, 0) + 1
            if q.gold:
                for label in q.gold.labels:
                    hist = label_hist[q.qtype.value]
                    hist[label] = hist.get(label, 0) + 1
    report = {
        "records": records,
        "questions": sum(qtype_counts.values()),
        "questions_per_qtype": qtype_counts,
        "label_histogram": {k: dict(sorted(v.items())) for k, v in label_hist.items()},
        "reasoning_depth_histogram": {str(k): v for k, v in sorted(depth_hist.items())},
        "story_sentences": _summary(sentence_counts),
        "story_tokens": _summary(token_counts),
        "question_tokens": _summary(question_tokens),
        "reference_bands": {},
    }
    observed = {
        "story_sentences": report["story_sentences"],
        "story_tokens": report["story_tokens"],
        "question_tokens": report["question_tokens"],
    }
    for key, ref in REFERENCE.items():
        obs = observed[key]
        if obs["count"] == 0:
            report["reference_bands"][key] = {"within_range": True, "mean_within_tolerance": True}
            continue
        lo = ref["mean"] * (1 - ref["mean_tol"])
        hi = ref["mean"] * (1 + ref["mean_tol"])
        report["reference_bands"][key] = {
            "within_range": ref["min"] <= obs["min"] and obs["max"] <= ref["max"],
            "mean_within_tolerance": lo <= obs["mean"] <= hi,
            "reference": ref,
        }
    return report


# --------------------------------------------------------------------------- #
# verify
# --------------------------------------------------------------------------- #


def _check(name: str):
    return {"name": name, "pass": True, "checked": 0, "failures": []}


def _fail(check: dict, detail: str, limit: int = 5) -> None:
    check["pass"] = False
    if len(check["failures"]) < limit:
        check["failures"].append(detail)


def verify(path, grammar_path=None, vocabulary_map_path=None, manifest_path=None) -> dict:
    """Run every corpus-level oracle; failures become report entries, not errors."""
    from .algebra import closure as close
    from .answers import answer_logical_form
    from .model import CONVERSE, EDGE_KINDS, RelationKind

    grammar = load_grammar(grammar_path)
    vmap = load_vocabulary_map(vocabulary_map_path)
    unseen_grammar = map_grammar(grammar, vmap)

    checks = {
        name: _check(name)
        for name in (
            "schema",
            "round_trip",
            "solve_agreement",
            "geometric_soundness",
            "sprl_offsets",
            "variant_properties",
        )
    }

    for record in iter_records(path):
        checks["schema"]["checked"] += 1
        rid = record.record_id
        vocab_tag = record.provenance.vocabulary
        record_grammar = {"seen": grammar, "unseen": unseen_grammar}.get(vocab_tag)

        # round trip + solve, via the text route only
        if record_grammar is not None:
            checks["round_trip"]["checked"] += 1
            try:
                parsed = parse_story(record.story.text, record_grammar)
                want = canonical_facts(list(record.story.facts), list(record.story.objects))
                got = canonical_facts(parsed.facts, parsed.objects)
                if want != got:
                    _fail(checks["round_trip"], f"{rid}: fact sets differ")
                    parsed = None
            except Exception as exc:
                _fail(checks["round_trip"], f"{rid}: {exc}")
                parsed = None
            if parsed is not None:
                pmodel = StoryModel.from_parse(parsed)
                for qi, q in enumerate(record.questions):
                    checks["solve_agreement"]["checked"] += 1
                    try:
                        lf, _ = parse_question(q.text, record_grammar)
                        answer, _ = answer_logical_form(lf, pmodel)
                        if q.gold is None or answer.labels != q.gold.labels:
                            stored = q.gold.labels if q.gold else None
                            _fail(
                                checks["solve_agreement"],
                                f"{rid} q{qi}: solved {answer.labels} != stored {stored}",
                            )
                    except Exception as exc:
                        _fail(checks["solve_agreement"], f"{rid} q{qi}: {exc}")

        # geometry: every entailed directional object fact respects coordinates
        checks["geometric_soundness"]["checked"] += 1
        try:
            entailed = close(record.story.facts, blocks=record.story.blocks)
            object_ids = {o.id for o in record.story.objects}
            for f in entailed.facts():
                if not f.positive or f.relation not in (
                    RelationKind.LEFT,
                    RelationKind.RIGHT,
                    RelationKind.ABOVE,
                    RelationKind.BELOW,
                ):
                    continue
                if f.subject not in object_ids or f.object not in object_ids:
                    continue
                ax, ay = record.scene.global_position(f.subject)
                bx, by = record.scene.global_position(f.object)
                ok = {
                    RelationKind.LEFT: ax < bx,
                    RelationKind.RIGHT: ax > bx,
                    RelationKind.ABOVE: ay > by,
                    RelationKind.BELOW: ay < by,
                }[f.relation]
                if not ok:
                    _fail(checks["geometric_soundness"], f"{rid}: {f.key} contradicts geometry")
        except Exception as exc:
            _fail(checks["geometric_soundness"], f"{rid}: {exc}")

        # sprl: spans slice cleanly and indicators lexicalize the fact kind
        vocab = (record_grammar or grammar).vocabulary
        containment_markers = {"has", "contains", "in"}
        for t in record.sprl:
            checks["sprl_offsets"]["checked"] += 1
            try:
                sentence = record.story.sentences[t.sentence_index]
            except IndexError:
                _fail(checks["sprl_offsets"], f"{rid}: sprl points at missing sentence")
                continue
            text = sentence.text
            spans = (t.trajector, t.indicator, t.landmark)
            if any(not (0 <= sp.start < sp.end <= len(text)) for sp in spans):
                _fail(checks["sprl_offsets"], f"{rid}: span out of bounds in {text!r}")
                continue
            indicator = text[t.indicator.start : t.indicator.end]
            rel_value = t.fact_key.split("|")[1]
            rel = RelationKind(rel_value)
            if rel in CONVERSE:
                expected = vocab.rel_phrase(rel)
                if indicator != expected:
                    _fail(
                        checks["sprl_offsets"],
                        f"{rid}: indicator {indicator!r} does not lexicalize {rel_value}",
                    )
            elif rel in EDGE_KINDS:
                if indicator != vocab.relations["touching"]:
                    _fail(checks["sprl_offsets"], f"{rid}: edge indicator {indicator!r}")
            else:  # containment
                if indicator.lower() not in containment_markers:
                    _fail(checks["sprl_offsets"], f"{rid}: containment indicator {indicator!r}")

        # variants
        if record.variants is not None:
            model = StoryModel.from_story(record.story)
            for qv in record.variants.contrast:
                checks["variant_properties"]["checked"] += 1
                parent = record.questions[qv.parent_index]
                if parent.gold and qv.question.gold and qv.question.gold.labels == parent.gold.labels:
                    _fail(checks["variant_properties"], f"{rid}: contrast gold equals pivot")
                recomputed, _ = answer_logical_form(qv.question.logical_form, model)
                if qv.question.gold and recomputed.labels != qv.question.gold.labels:
                    _fail(checks["variant_properties"], f"{rid}: contrast gold not reproducible")
            for qv in record.variants.consistency:
                checks["variant_properties"]["checked"] += 1
                recomputed, _ = answer_logical_form(qv.question.logical_form, model)
                if qv.question.gold and recomputed.labels != qv.question.gold.labels:
                    _fail(checks["variant_properties"], f"{rid}: consistency gold not reproducible")
            if record.variants.unseen is not None:
                checks["variant_properties"]["checked"] += 1
                for q, uq in zip(record.questions, record.variants.unseen.questions):
                    if q.gold and uq.gold and q.gold.labels != uq.gold.labels:
                        _fail(checks["variant_properties"], f"{rid}: unseen variant changed gold")

    if manifest_path is not None:
        manifest_check = _check("manifest_counts")
        with open(manifest_path, "r", encoding="utf-8") as fh:
            manifest = json.load(fh)
        split = Path(path).stem
        entry = manifest.get("splits", {}).get(split)
        manifest_check["checked"] = 1
        if entry is not None:
            recount: dict[str, int] = {qt.value: 0 for qt in QType}
            total = 0
            for record in iter_records(path):
                for q in record.questions:
                    recount[q.qtype.value] += 1
                    total += 1
            if recount != entry["questions_per_qtype"] or total != entry["questions"]:
                _fail(manifest_check, f"{split}: manifest counts disagree with file")
        checks["manifest_counts"] = manifest_check

    return {
        "all_pass": all(c["pass"] for c in checks.values()),
        "checks": list(checks.values()),
    }
