"""Reward-driven corpus filtering and class rebalancing."""
from __future__ import annotations

import json
import math
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Hashable, Iterable, Iterator, Mapping, Sequence, TypeVar

from .rewards import InvalidInputError, Scorer, check_score

T = TypeVar("T")

MODES = ("Q", "HQ")


class ScoringError(RuntimeError):
    def __init__(self, index: int, cause: BaseException):
        super().__init__(f"scoring record {index} failed: {cause}")
        self.index = index


@dataclass
class ParallelPair:
    english: str
    chinese: str
    r_bas: float | None = None
    r_adv: float | None = None

    def __post_init__(self):
        if not self.english or not self.chinese:
            raise InvalidInputError("english and chinese must be non-empty")
        for name in ("r_bas", "r_adv"):
            value = getattr(self, name)
            if value is not None:
                setattr(self, name, check_score(value))

    @classmethod
    def from_dict(cls, record: Mapping) -> "ParallelPair":
        return cls(record["english"], record["chinese"], record.get("r_bas"), record.get("r_adv"))

    def to_dict(self) -> dict:
        out = {"english": self.english, "chinese": self.chinese}
        if self.r_bas is not None:
            out["r_bas"] = self.r_bas
        if self.r_adv is not None:
            out["r_adv"] = self.r_adv
        return out


def read_pairs(path: Path | str) -> Iterator[ParallelPair]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if line.strip():
                try:
                    yield ParallelPair.from_dict(json.loads(line))
                except (KeyError, TypeError, ValueError) as exc:
                    raise InvalidInputError(f"{path}:{lineno}: {exc}") from exc


def round_half_up(x: float) -> int:
    return math.floor(x + 0.5)


def keeps(score: float, mode: str) -> bool:
    label = round_half_up(score)
    if mode == "Q":
        return label >= 3
    if mode == "HQ":
        return label == 4
    raise ValueError(f"unknown filter mode {mode!r}; expected one of {MODES}")


def filter_quality(
    corpus: Sequence[ParallelPair],
    scorer: Scorer | None,
    mode: str = "Q",
    *,
    parallelism: int = 1,
) -> list[ParallelPair]:
    """Keep pairs whose rounded basic score is >= 3 (Q) or == 4 (HQ).

    Missing ``r_bas`` values are computed with ``scorer`` and stored on
    the record, so filtering the same corpus twice scores it once.
    """
    if mode not in MODES:
        raise ValueError(f"unknown filter mode {mode!r}; expected one of {MODES}")
    if not corpus:
        raise ValueError("corpus is empty")

    missing = [i for i, pair in enumerate(corpus) if pair.r_bas is None]
    if missing and scorer is None:
        raise ValueError(f"{len(missing)} records lack r_bas and no scorer was given")

    def score(i: int) -> float:
        pair = corpus[i]
        try:
            return check_score(scorer.score_basic(pair.english, pair.chinese))
        except Exception as exc:
            raise ScoringError(i, exc) from exc

    if parallelism > 1 and len(missing) > 1:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            scores = list(pool.map(score, missing))
    else:
        scores = [score(i) for i in missing]
    for i, s in zip(missing, scores):
        corpus[i].r_bas = s

    return [pair for pair in corpus if keeps(pair.r_bas, mode)]


@dataclass(frozen=True)
class RebalancePlan:
    """Per-class sampling factors.

    A factor ``f`` in ``(0, 1)`` keeps each record with probability ``f``;
    ``f >= 1`` keeps every record, adds ``floor(f) - 1`` whole copies and
    one more copy with probability ``f - floor(f)``. Classes not listed
    are kept as they are.
    """

    factors: Mapping[Hashable, float] = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        for label, f in self.factors.items():
            if not (isinstance(f, (int, float)) and f > 0 and math.isfinite(f)):
                raise ValueError(f"invalid factor {f!r} for class {label!r}")

    @classmethod
    def from_dict(cls, data: Mapping) -> "RebalancePlan":
        factors = data.get("factors", {})
        if not isinstance(factors, Mapping):
            raise ValueError("plan 'factors' must be a mapping")
        return cls({_label(k): float(v) for k, v in factors.items()}, int(data.get("seed", 0)))

    def factor(self, label: Hashable) -> float:
        return self.factors.get(label, 1.0)


def _label(key):
    # JSON object keys are strings; integer-looking labels become ints
    if isinstance(key, str) and key.lstrip("-").isdigit():
        return int(key)
    return key


# class -> factor for the basic and advanced reward training sets
BASIC_PLAN = RebalancePlan({2: 1.5, 3: 0.7, 4: 0.5})
ADVANCED_PLAN = RebalancePlan({2: 0.4, 3: 1.5})


def rebalance(
    dataset: Iterable[T],
    plan: RebalancePlan,
    label: Callable[[T], Hashable] | str = "label",
) -> list[T]:
    """Down/up-sample records per class with a seeded RNG.

    Records are never modified; output keeps input order with extra copies
    placed right after their original.
    """
    get = (lambda r: r[label]) if isinstance(label, str) else label
    rng = random.Random(plan.seed)
    out: list[T] = []
    for record in dataset:
        f = plan.factor(get(record))
        if f < 1:
            if rng.random() < f:
                out.append(record)
            continue
        whole = math.floor(f)
        out.extend([record] * whole)
        if f > whole and rng.random() < f - whole:
            out.append(record)
    return out
