"""Two-pass paragraph translation and whole-song orchestration.

Pass 1 samples every line with the length-only prompt and optimizes with
the rhyme class free. Its winning class ``r*`` then conditions pass 2:
extra samples per line with the rhyme prompt, merged into the pass-1
pools, re-optimized with the last line held to ``r*``.
"""
from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .genclient import (
    GenerationParams,
    Generator,
    MockGenerator,
    generate_candidates,
    stable_seed,
)
from .lossopt import (
    DEFAULT_WEIGHTS,
    Candidate,
    LossWeights,
    ParagraphSolution,
    SentenceSpec,
    dedupe,
    feasible_pools,
    optimize,
)
from .rewards import MockScorer, Scorer
from .textproc import PinyinTable, RhymeClass, RhymeTable, count_syllables

log = logging.getLogger(__name__)


class InputError(ValueError):
    pass


@dataclass(frozen=True)
class ParagraphSpec:
    sentences: tuple[SentenceSpec, ...]
    references: tuple[str, ...] | None = None
    song_id: str = ""
    paragraph_id: str = ""

    def __post_init__(self):
        if not self.sentences:
            raise InputError("a paragraph needs at least one sentence")
        if self.references is not None and len(self.references) != len(self.sentences):
            raise InputError(
                f"paragraph {self.paragraph_id!r}: {len(self.references)} references "
                f"for {len(self.sentences)} sentences"
            )

    @classmethod
    def from_lines(
        cls,
        lines: Sequence[str],
        references: Sequence[str] | None = None,
        syllables: Sequence[int | None] | None = None,
        *,
        song_id: str = "",
        paragraph_id: str = "",
    ) -> "ParagraphSpec":
        """Build a paragraph; target lengths default to the syllable count."""
        overrides = list(syllables) if syllables is not None else [None] * len(lines)
        sentences = tuple(
            SentenceSpec(i, line, target_length(line, override))
            for i, (line, override) in enumerate(zip(lines, overrides))
        )
        return cls(
            sentences,
            tuple(references) if references is not None else None,
            song_id,
            paragraph_id,
        )

    @property
    def sources(self) -> list[str]:
        return [s.source for s in self.sentences]

    @property
    def targets(self) -> list[int]:
        return [s.target_length for s in self.sentences]

    @property
    def context(self) -> str:
        return "\n".join(self.sources)


def target_length(english: str, override: int | None = None) -> int:
    if override is not None:
        if override < 1:
            raise InputError(f"syllable override must be >= 1, got {override}")
        return override
    return max(1, count_syllables(english))


@dataclass
class PipelineConfig:
    samples_pass1: int = 40
    samples_pass2: int = 40
    weights: LossWeights = DEFAULT_WEIGHTS
    params: GenerationParams = field(default_factory=GenerationParams)
    generator: Generator = field(default_factory=MockGenerator)
    scorer: Scorer = field(default_factory=MockScorer)
    pinyin: PinyinTable | None = None
    rhymes: RhymeTable | None = None
    seed: int = 0
    parallelism: int = 4
    fail_fast: bool = False

    def __post_init__(self):
        if self.samples_pass1 < 1:
            raise ValueError("samples_pass1 must be >= 1")
        if self.samples_pass2 < 0:
            raise ValueError("samples_pass2 must be >= 0")
        if self.parallelism < 1:
            raise ValueError("parallelism must be >= 1")


@dataclass(frozen=True)
class ParagraphTrace:
    first_pass: ParagraphSolution
    final: ParagraphSolution
    pools: tuple[tuple[Candidate, ...], ...]
    second_pass: bool


def _sentence_seed(cfg: PipelineConfig, p: ParagraphSpec, index: int, pass_tag: str) -> int:
    # keyed on paragraph content, not position, so reordering a song
    # reorders its outputs and nothing else
    return stable_seed(cfg.seed, p.song_id, p.sources, index, pass_tag)


def _sample_pools(
    p: ParagraphSpec, cfg: PipelineConfig, n: int, rhyme: RhymeClass | None, pass_tag: str
) -> list[list[Candidate]]:
    params = GenerationParams(
        temperature=cfg.params.temperature,
        top_p=cfg.params.top_p,
        n_samples=n,
        max_tokens=cfg.params.max_tokens,
    )

    def one(spec: SentenceSpec) -> list[Candidate]:
        return generate_candidates(
            spec,
            rhyme,
            cfg.generator,
            params,
            cfg.scorer,
            cfg.pinyin,
            cfg.rhymes,
            seed=_sentence_seed(cfg, p, spec.index, pass_tag),
            pass_tag=pass_tag,
            context=p.context,
        )

    if cfg.parallelism == 1 or len(p.sentences) == 1:
        return [one(spec) for spec in p.sentences]
    with ThreadPoolExecutor(max_workers=min(cfg.parallelism, len(p.sentences))) as pool:
        return list(pool.map(one, p.sentences))


def translate_paragraph_traced(p: ParagraphSpec, cfg: PipelineConfig) -> ParagraphTrace:
    specs = p.sentences
    w = cfg.weights
    first_pools = feasible_pools(_sample_pools(p, cfg, cfg.samples_pass1, None, "first"), w)
    first = optimize(first_pools, specs, w, assume_feasible=True)

    if cfg.samples_pass2 == 0 or first.rhyme.is_unknown:
        return ParagraphTrace(first, first, tuple(map(tuple, first_pools)), False)

    extra = _sample_pools(p, cfg, cfg.samples_pass2, first.rhyme, "second")
    # pass-1 feasible candidates stay feasible; new ones must clear the floor
    merged = [
        dedupe([*old, *(c for c in new if c.r_bas >= w.hard_basic_floor)])
        for old, new in zip(first_pools, extra)
    ]
    final = optimize(merged, specs, w, rhyme_fixed=first.rhyme, assume_feasible=True)
    return ParagraphTrace(first, final, tuple(map(tuple, merged)), True)


def translate_paragraph(p: ParagraphSpec, cfg: PipelineConfig) -> ParagraphSolution:
    return translate_paragraph_traced(p, cfg).final


class SongTranslationError(RuntimeError):
    """Some paragraphs failed; ``results`` holds ``None`` at their positions."""

    def __init__(self, failures: Mapping[int, BaseException], results: list):
        indices = ", ".join(str(i) for i in sorted(failures))
        super().__init__(f"{len(failures)} paragraph(s) failed: {indices}")
        self.failures = dict(failures)
        self.results = results


def translate_song(
    paragraphs: Sequence[ParagraphSpec], cfg: PipelineConfig
) -> list[ParagraphSolution]:
    if not paragraphs:
        raise InputError("a song needs at least one paragraph")
    results: list[ParagraphSolution | None] = []
    failures: dict[int, BaseException] = {}
    for i, p in enumerate(paragraphs):
        try:
            results.append(translate_paragraph(p, cfg))
        except Exception as exc:
            if cfg.fail_fast:
                raise
            log.warning("paragraph %d failed: %s", i, exc)
            failures[i] = exc
            results.append(None)
    if failures:
        raise SongTranslationError(failures, results)
    return results  # type: ignore[return-value]


# --- song files -------------------------------------------------------------


def _read_jsonl(path: Path | str) -> list[dict]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise InputError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            if not isinstance(record, dict):
                raise InputError(f"{path}:{lineno}: expected a JSON object")
            records.append(record)
    return records


def paragraphs_from_records(records: Iterable[Mapping]) -> list[ParagraphSpec]:
    """Group song-file records into paragraphs (first-appearance order)."""
    groups: dict[tuple[str, str], list[Mapping]] = {}
    for n, rec in enumerate(records):
        try:
            key = (str(rec["song_id"]), str(rec["paragraph_id"]))
            int(rec["line_idx"])
            if not isinstance(rec["english"], str) or not rec["english"].strip():
                raise InputError(f"record {n}: english must be a non-empty string")
        except KeyError as exc:
            raise InputError(f"record {n}: missing field {exc}") from exc
        except (TypeError, ValueError) as exc:
            raise InputError(f"record {n}: {exc}") from exc
        groups.setdefault(key, []).append(rec)

    paragraphs = []
    for (song_id, paragraph_id), recs in groups.items():
        recs = sorted(recs, key=lambda r: int(r["line_idx"]))
        refs = [r.get("reference") for r in recs]
        if any(ref is not None for ref in refs) and not all(ref is not None for ref in refs):
            raise InputError(f"paragraph {song_id}/{paragraph_id}: references only on some lines")
        syllables = [r.get("syllables") for r in recs]
        paragraphs.append(
            ParagraphSpec.from_lines(
                [r["english"] for r in recs],
                refs if refs and refs[0] is not None else None,
                [None if s is None else int(s) for s in syllables],
                song_id=song_id,
                paragraph_id=paragraph_id,
            )
        )
    return paragraphs


def read_song(path: Path | str) -> list[ParagraphSpec]:
    paragraphs = paragraphs_from_records(_read_jsonl(path))
    if not paragraphs:
        raise InputError(f"{path}: no records")
    return paragraphs


def solution_records(p: ParagraphSpec, solution: ParagraphSolution) -> list[dict]:
    records = []
    for spec, c in zip(p.sentences, solution.chosen):
        records.append(
            {
                "record": "line",
                "song_id": p.song_id,
                "paragraph_id": p.paragraph_id,
                "line_idx": spec.index,
                "chinese": c.text,
                "length": c.length,
                "target_length": spec.target_length,
                "rhyme_class": c.rhyme.name,
                "r_bas": c.r_bas,
                "r_adv": c.r_adv,
            }
        )
    records.append(
        {
            "record": "paragraph",
            "song_id": p.song_id,
            "paragraph_id": p.paragraph_id,
            "rhyme_class": solution.rhyme.name,
            "total_loss": solution.total_loss,
            "breakdown": [t.to_dict() for t in solution.breakdown],
        }
    )
    return records


def read_outputs(path: Path | str) -> dict[tuple[str, str], list[dict]]:
    """Line records of a translated song file, grouped by paragraph."""
    grouped: dict[tuple[str, str], list[dict]] = {}
    for n, rec in enumerate(_read_jsonl(path)):
        if rec.get("record", "line") != "line":
            continue
        try:
            key = (str(rec["song_id"]), str(rec["paragraph_id"]))
            rec["line_idx"] = int(rec["line_idx"])
            if not isinstance(rec["chinese"], str):
                raise InputError(f"{path}: record {n}: chinese must be a string")
        except KeyError as exc:
            raise InputError(f"{path}: record {n}: missing field {exc}") from exc
        grouped.setdefault(key, []).append(rec)
    for recs in grouped.values():
        recs.sort(key=lambda r: r["line_idx"])
    return grouped
