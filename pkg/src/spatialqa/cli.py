"""Command-line interface: generate / stats / verify / solve / perturb / import-scene.

Data goes to files or stdout; logging goes to stderr. Exit code 0 only when
every invoked check passes.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from .grammar import load_grammar, load_vocabulary_map
from .pipeline import (
    PipelineConfig,
    config_from_dict,
    generate,
    iter_records,
    load_config,
    stats,
    verify,
)
from .sampler import export_scene, import_scene
from .serialize import SchemaError, dumps
from .variants import make_unseen

CONFIG_ENV = "SPATIALQA_CONFIG"


def _add_config_arg(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--config",
        default=os.environ.get(CONFIG_ENV),
        help=f"pipeline config JSON (default: ${CONFIG_ENV})",
    )


def _config_from_args(args: argparse.Namespace) -> PipelineConfig:
    config = load_config(args.config)
    data = config.to_dict()
    if getattr(args, "master_seed", None) is not None:
        data["master_seed"] = args.master_seed
    for split in ("train", "dev", "test_seen", "test_unseen"):
        value = getattr(args, split, None)
        if value is not None:
            data["counts"][split] = value
    if getattr(args, "questions_per_story", None) is not None:
        data["questions_per_story"] = args.questions_per_story
    if getattr(args, "describe_fraction", None) is not None:
        data["sampler"]["describe_fraction"] = args.describe_fraction
    if getattr(args, "unseen_fraction", None) is not None:
        data["unseen_fraction"] = args.unseen_fraction
    if getattr(args, "grammar", None) is not None:
        data["grammar_path"] = args.grammar
    if getattr(args, "vocab_map", None) is not None:
        data["vocabulary_map_path"] = args.vocab_map
    return config_from_dict(data)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="spatialqa", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate dataset splits and a manifest")
    _add_config_arg(p)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--master-seed", type=int)
    p.add_argument("--train", type=int)
    p.add_argument("--dev", type=int)
    p.add_argument("--test-seen", dest="test_seen", type=int)
    p.add_argument("--test-unseen", dest="test_unseen", type=int)
    p.add_argument("--questions-per-story", type=int)
    p.add_argument("--describe-fraction", type=float)
    p.add_argument("--unseen-fraction", type=float)
    p.add_argument("--grammar")
    p.add_argument("--vocab-map")

    p = sub.add_parser("stats", help="corpus statistics against the reference bands")
    p.add_argument("--data", required=True, help="dataset JSONL file")

    p = sub.add_parser("verify", help="run every corpus-level oracle")
    p.add_argument("--data", required=True, help="dataset JSONL file")
    p.add_argument("--grammar")
    p.add_argument("--vocab-map")
    p.add_argument("--manifest", help="manifest.json to recount against")

    p = sub.add_parser("solve", help="answer a question from raw text")
    p.add_argument("--story", required=True, help="story text, or @path to a file")
    p.add_argument("--question", required=True, help="question text, or @path")
    p.add_argument("--grammar")
    p.add_argument("--vocabulary", choices=("seen", "unseen"), default="seen")
    p.add_argument("--vocab-map")

    p = sub.add_parser("perturb", help="apply the unseen-vocabulary transform to a dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--fraction", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--grammar")
    p.add_argument("--vocab-map")

    p = sub.add_parser("import-scene", help="validate an NLVR-like scene file")
    p.add_argument("--scene", required=True, help="scene JSON file")

    args = parser.parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )

    try:
        return _dispatch(args)
    except SchemaError as exc:
        logging.error("schema error: %s", exc)
        return 1
    except Exception as exc:  # fail fast with the offending error
        logging.error("%s", exc)
        return 1


def _read_text_arg(value: str) -> str:
    if value.startswith("@"):
        return Path(value[1:]).read_text(encoding="utf-8").strip()
    return value


def _dispatch(args: argparse.Namespace) -> int:
    if args.command == "generate":
        config = _config_from_args(args)
        manifest = generate(config, args.out)
        json.dump(manifest["splits"], sys.stdout, indent=2, sort_keys=True)
        print()
        return 0

    if args.command == "stats":
        report = stats(args.data)
        json.dump(report, sys.stdout, indent=2, sort_keys=True)
        print()
        bands = report["reference_bands"]
        ok = all(b["within_range"] and b["mean_within_tolerance"] for b in bands.values())
        return 0 if ok else 1

    if args.command == "verify":
        report = verify(
            args.data,
            grammar_path=args.grammar,
            vocabulary_map_path=args.vocab_map,
            manifest_path=args.manifest,
        )
        for check in report["checks"]:
            status = "PASS" if check["pass"] else "FAIL"
            print(f"{status} {check['name']} ({check['checked']} checked)")
            for failure in check["failures"]:
                print(f"     {failure}")
        return 0 if report["all_pass"] else 1

    if args.command == "solve":
        from .parsing import solve

        grammar = load_grammar(args.grammar)
        if args.vocabulary == "unseen":
            from .grammar import map_grammar

            grammar = map_grammar(grammar, load_vocabulary_map(args.vocab_map))
        answer = solve(_read_text_arg(args.story), _read_text_arg(args.question), grammar)
        print(json.dumps({"labels": list(answer.labels)}))
        return 0

    if args.command == "perturb":
        grammar = load_grammar(args.grammar)
        vmap = load_vocabulary_map(args.vocab_map)
        out_path = Path(args.out)
        out_path.parent.mkdir(parents=True, exist_ok=True)
        count = 0
        with out_path.open("w", encoding="utf-8") as fh:
            for record in iter_records(args.data):
                transformed = make_unseen(record, vmap, args.fraction, args.seed + count, grammar)
                fh.write(dumps(transformed))
                fh.write("\n")
                count += 1
        logging.info("perturbed %d records -> %s", count, out_path)
        return 0

    if args.command == "import-scene":
        scene = import_scene(args.scene)
        json.dump(export_scene(scene), sys.stdout, indent=2, sort_keys=True)
        print()
        return 0

    raise AssertionError(args.command)


if __name__ == "__main__":
    sys.exit(main())
