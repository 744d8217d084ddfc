"""Command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 bad input, 4 backend
(generation/scoring) failure, 5 internal error.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
from contextlib import contextmanager
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Iterator, Mapping, Sequence

import httpx
import yaml

from . import __version__
from .corpusfilter import (
    ADVANCED_PLAN,
    BASIC_PLAN,
    RebalancePlan,
    ScoringError,
    filter_quality,
    read_pairs,
    rebalance,
)
from .evalkit import evaluate_corpus
from .genclient import GenerationError, GenerationParams, make_generator
from .lossopt import EmptyPoolError, LossWeights
from .pipeline import (
    InputError,
    PipelineConfig,
    SongTranslationError,
    read_outputs,
    read_song,
    solution_records,
    translate_song,
)
from .rewards import InvalidInputError, RemoteScoringError, make_scorer
from .textproc import PinyinTable, RhymeTable, count_syllables, rhyme_class

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INPUT = 3
EXIT_BACKEND = 4
EXIT_INTERNAL = 5

log = logging.getLogger("lyricopt")


class ConfigError(ValueError):
    pass


# --- configuration ----------------------------------------------------------

_WEIGHT_KEYS = {f.name for f in fields(LossWeights)}
_GENERATION_KEYS = {"temperature", "top_p", "max_tokens"}
_TOP_LEVEL = {
    "samples_pass1",
    "samples_pass2",
    "seed",
    "parallelism",
    "fail_fast",
    "weights",
    "generation",
    "generator",
    "scorer",
    "tables",
}
_TABLE_KEYS = {"pinyin", "rhyme"}


@dataclass
class AppConfig:
    samples_pass1: int = 40
    samples_pass2: int = 40
    seed: int = 0
    parallelism: int = 4
    fail_fast: bool = False
    weights: dict = field(default_factory=dict)
    generation: dict = field(default_factory=dict)
    generator: dict = field(default_factory=lambda: {"kind": "mock"})
    scorer: dict = field(default_factory=lambda: {"kind": "mock"})
    tables: dict = field(default_factory=dict)

    @classmethod
    def load(cls, path: str | Path | None) -> "AppConfig":
        if path is None:
            return cls()
        try:
            with open(path, encoding="utf-8") as fh:
                data = yaml.safe_load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except yaml.YAMLError as exc:
            raise ConfigError(f"config {path} is not valid YAML/JSON: {exc}") from exc
        return cls.from_mapping(data or {})

    @classmethod
    def from_mapping(cls, data: Any) -> "AppConfig":
        if not isinstance(data, Mapping):
            raise ConfigError("config root must be a mapping")
        _reject_unknown(data, _TOP_LEVEL, "")
        for section, allowed in (
            ("weights", _WEIGHT_KEYS),
            ("generation", _GENERATION_KEYS),
            ("tables", _TABLE_KEYS),
        ):
            if section in data:
                if not isinstance(data[section], Mapping):
                    raise ConfigError(f"config key '{section}' must be a mapping")
                _reject_unknown(data[section], allowed, section + ".")
        for section in ("generator", "scorer"):
            if section in data and not isinstance(data[section], Mapping):
                raise ConfigError(f"config key '{section}' must be a mapping")
        cfg = cls(**{k: (dict(v) if isinstance(v, Mapping) else v) for k, v in data.items()})
        cfg.validate()
        return cfg

    def validate(self) -> None:
        for key in ("samples_pass1", "samples_pass2", "seed", "parallelism"):
            value = getattr(self, key)
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigError(f"config key '{key}' must be an integer, got {value!r}")
        if self.samples_pass1 < 1:
            raise ConfigError("config key 'samples_pass1' must be >= 1")
        if self.samples_pass2 < 0:
            raise ConfigError("config key 'samples_pass2' must be >= 0")
        if self.parallelism < 1:
            raise ConfigError("config key 'parallelism' must be >= 1")
        if not isinstance(self.fail_fast, bool):
            raise ConfigError("config key 'fail_fast' must be a boolean")
        self.build_weights()
        self.build_params()
        for section in ("generator", "scorer"):
            spec = getattr(self, section)
            kind = spec.get("kind", "mock")
            if kind not in ("mock", "http"):
                raise ConfigError(f"config key '{section}.kind' must be 'mock' or 'http'")
            if kind == "http" and not spec.get("endpoint"):
                raise ConfigError(f"config key '{section}.endpoint' is required for kind 'http'")

    def build_weights(self) -> LossWeights:
        try:
            return LossWeights(**{k: float(v) for k, v in self.weights.items()})
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"config key 'weights': {exc}") from exc

    def build_params(self) -> GenerationParams:
        try:
            return GenerationParams(n_samples=max(1, self.samples_pass1), **self.generation)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"config key 'generation': {exc}") from exc

    def use_mock(self) -> None:
        if self.generator.get("kind", "mock") != "mock":
            self.generator = {"kind": "mock"}
        if self.scorer.get("kind", "mock") != "mock":
            self.scorer = {"kind": "mock"}

    def tables_or_default(self) -> tuple[PinyinTable | None, RhymeTable | None]:
        try:
            pinyin = PinyinTable.from_file(self.tables["pinyin"]) if "pinyin" in self.tables else None
            rhymes = RhymeTable.from_file(self.tables["rhyme"]) if "rhyme" in self.tables else None
        except (OSError, ValueError) as exc:
            raise ConfigError(f"config key 'tables': {exc}") from exc
        return pinyin, rhymes

    def build_scorer(self):
        try:
            return make_scorer(self.scorer)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"config key 'scorer': {exc}") from exc

    def pipeline(self) -> PipelineConfig:
        pinyin, rhymes = self.tables_or_default()
        try:
            generator = make_generator(self.generator)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"config key 'generator': {exc}") from exc
        return PipelineConfig(
            samples_pass1=self.samples_pass1,
            samples_pass2=self.samples_pass2,
            weights=self.build_weights(),
            params=self.build_params(),
            generator=generator,
            scorer=self.build_scorer(),
            pinyin=pinyin,
            rhymes=rhymes,
            seed=self.seed,
            parallelism=self.parallelism,
            fail_fast=self.fail_fast,
        )


def _reject_unknown(data: Mapping, allowed: set[str], prefix: str) -> None:
    for key in data:
        if key not in allowed:
            raise ConfigError(f"unknown config key '{prefix}{key}'")


# --- output -----------------------------------------------------------------


@contextmanager
def atomic_write(path: str | Path) -> Iterator[Any]:
    """Write to a temporary file next to ``path``; rename only on success."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            yield fh
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _dump(record: Mapping) -> str:
    return json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n"


# --- subcommands ------------------------------------------------------------


def cmd_translate(args: argparse.Namespace) -> int:
    app = AppConfig.load(args.config)
    if args.samples1 is not None:
        app.samples_pass1 = args.samples1
    if args.samples2 is not None:
        app.samples_pass2 = args.samples2
    if args.seed is not None:
        app.seed = args.seed
    if args.parallelism is not None:
        app.parallelism = args.parallelism
    if args.fail_fast:
        app.fail_fast = True
    if args.mock:
        app.use_mock()
    if args.mock_mode is not None:
        if app.generator.get("kind", "mock") != "mock":
            raise ConfigError("--mock-mode requires the mock generator")
        app.generator["mode"] = args.mock_mode
    app.validate()
    cfg = app.pipeline()

    paragraphs = read_song(args.input)
    solutions = translate_song(paragraphs, cfg)
    with atomic_write(args.output) as fh:
        for p, solution in zip(paragraphs, solutions):
            for record in solution_records(p, solution):
                fh.write(_dump(record))
    lines = sum(len(p.sentences) for p in paragraphs)
    print(f"translated {len(paragraphs)} paragraphs, {lines} lines -> {args.output}", file=sys.stderr)
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    app = AppConfig.load(args.config)
    if args.mock:
        app.use_mock()
    pinyin, rhymes = app.tables_or_default()
    paragraphs = read_song(args.specs)
    grouped = read_outputs(args.outputs)

    outputs = []
    for p in paragraphs:
        recs = grouped.get((p.song_id, p.paragraph_id))
        if recs is None:
            raise InputError(f"no outputs for paragraph {p.song_id}/{p.paragraph_id}")
        outputs.append([r["chinese"] for r in recs])

    references = None
    if args.references:
        ref_paragraphs = {(q.song_id, q.paragraph_id): q for q in read_song(args.references)}
        references = []
        for p in paragraphs:
            q = ref_paragraphs.get((p.song_id, p.paragraph_id))
            if q is None or q.references is None:
                raise InputError(f"no references for paragraph {p.song_id}/{p.paragraph_id}")
            references.append(list(q.references))

    scorer = app.build_scorer() if args.score else None
    report = evaluate_corpus(
        outputs,
        paragraphs,
        references,
        scorer,
        table=pinyin,
        rhymes=rhymes,
        anchor=args.anchor,
    )
    if args.report:
        with atomic_write(args.report) as fh:
            json.dump(report.to_dict(), fh, ensure_ascii=False, indent=2, sort_keys=True)
            fh.write("\n")
    print(report.to_table())
    return EXIT_OK


def cmd_filter(args: argparse.Namespace) -> int:
    app = AppConfig.load(args.config)
    if args.mock:
        app.use_mock()
    scorer = app.build_scorer()
    corpus = list(read_pairs(args.input))
    if not corpus:
        raise InputError(f"{args.input}: corpus is empty")
    kept = filter_quality(corpus, scorer, args.mode, parallelism=args.parallelism)
    with atomic_write(args.output) as fh:
        for pair in kept:
            fh.write(_dump(pair.to_dict()))
    print(f"kept {len(kept)}/{len(corpus)}")
    return EXIT_OK


def _load_plan(spec: str, seed: int | None) -> RebalancePlan:
    presets = {"basic": BASIC_PLAN, "advanced": ADVANCED_PLAN}
    if spec in presets:
        plan = presets[spec]
    else:
        try:
            with open(spec, encoding="utf-8") as fh:
                plan = RebalancePlan.from_dict(yaml.safe_load(fh) or {})
        except OSError as exc:
            raise ConfigError(f"cannot read plan {spec}: {exc}") from exc
        except (yaml.YAMLError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid plan {spec}: {exc}") from exc
    if seed is not None:
        plan = RebalancePlan(plan.factors, seed)
    return plan


def cmd_rebalance(args: argparse.Namespace) -> int:
    plan = _load_plan(args.plan, args.seed)
    records = []
    with open(args.input, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                record[args.label_field]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise InputError(f"{args.input}:{lineno}: {exc!r}") from exc
            records.append(record)
    out = rebalance(records, plan, label=args.label_field)
    with atomic_write(args.output) as fh:
        for record in out:
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")
    print(f"wrote {len(out)} records from {len(records)}")
    return EXIT_OK


def cmd_rhyme(args: argparse.Namespace) -> int:
    app = AppConfig.load(args.config)
    pinyin, rhymes = app.tables_or_default()
    print(rhyme_class(args.text, pinyin, rhymes).name)
    return EXIT_OK


def cmd_syllables(args: argparse.Namespace) -> int:
    print(count_syllables(args.text))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lyricopt", description="Singable lyric translation by paragraph-level optimization."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("translate", help="translate a song file")
    p.add_argument("input", help="song JSON-lines file")
    p.add_argument("output", help="translated JSON-lines file")
    p.add_argument("--config")
    p.add_argument("--samples1", type=int, help="samples per line in pass 1")
    p.add_argument("--samples2", type=int, help="samples per line in pass 2 (0 = single pass)")
    p.add_argument("--seed", type=int)
    p.add_argument("--parallelism", type=int)
    p.add_argument("--fail-fast", action="store_true")
    p.add_argument("--mock", action="store_true", help="use the offline mock generator and scorer")
    p.add_argument("--mock-mode", choices=("default", "exhaustive", "impoverished"))
    p.set_defaults(func=cmd_translate)

    p = sub.add_parser("eval", help="evaluate translated output against a song file")
    p.add_argument("outputs", help="output of 'translate'")
    p.add_argument("specs", help="song file the outputs came from")
    p.add_argument("--references", help="song file whose 'reference' fields hold gold lines")
    p.add_argument("--report", help="write the JSON report here")
    p.add_argument("--score", action="store_true", help="also compute mean R_bas / R_adv")
    p.add_argument("--anchor", choices=("plurality", "last"), default="plurality")
    p.add_argument("--config")
    p.add_argument("--mock", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("filter", help="keep Q (R_bas >= 3) or HQ (R_bas = 4) pairs")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--mode", choices=("Q", "HQ"), default="Q")
    p.add_argument("--parallelism", type=int, default=1)
    p.add_argument("--config")
    p.add_argument("--mock", action="store_true")
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("rebalance", help="down/up-sample classes of a labeled dataset")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--plan", required=True, help="'basic', 'advanced' or a JSON/YAML plan file")
    p.add_argument("--label-field", default="label")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_rebalance)

    p = sub.add_parser("rhyme", help="print the rhyme class of a Chinese line")
    p.add_argument("text")
    p.add_argument("--config")
    p.set_defaults(func=cmd_rhyme)

    p = sub.add_parser("syllables", help="print the syllable count of an English line")
    p.add_argument("text")
    p.set_defaults(func=cmd_syllables)
    return parser


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SongTranslationError as exc:
        for index, cause in sorted(exc.failures.items()):
            print(f"paragraph {index}: {cause}", file=sys.stderr)
        print(f"backend error: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except (GenerationError, RemoteScoringError, ScoringError, EmptyPoolError, httpx.HTTPError) as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except (InputError, InvalidInputError, OSError, ValueError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # pragma: no cover - last resort
        log.exception("internal error")
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
