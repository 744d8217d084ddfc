"""Paragraph-level loss and its exact minimizer.

For a paragraph of ``n`` lines with one chosen candidate ``y_i`` per line::

    L = sum_i  lambda1 * [rhyme(y_i) != rhyme(y_n)]
             + lambda2 * D(target_i, len(y_i))
             - lambda3 * r_adv(y_i)
             - lambda4 * r_bas(y_i)

    D(target, length) = beta * (length - target)  if length >= target
                        target - length           otherwise

Only the rhyme term couples lines, and only through the last line, so the
minimizer fixes the last line's rhyme class, solves every line on its own,
and keeps the best class. :func:`brute_force_optimize` enumerates every
combination instead and serves as the reference for that shortcut.

Ties are broken deterministically. Within a line: higher ``r_bas``, then
higher ``r_adv``, then smaller ``|length - target|``, then earlier position
in the pool. Across rhyme classes: more lines in the class, then lower
class id.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

from .rewards import check_score
from .textproc import UNKNOWN, RhymeClass

PASS_TAGS = ("first", "second")


class EmptyPoolError(ValueError):
    def __init__(self, index: int, message: str | None = None):
        super().__init__(message or f"candidate pool for sentence {index} is empty")
        self.index = index


class SearchCapExceeded(ValueError):
    pass


@dataclass(frozen=True)
class SentenceSpec:
    index: int
    source: str
    target_length: int

    def __post_init__(self):
        if self.target_length < 1:
            raise ValueError(f"target_length must be >= 1, got {self.target_length}")


@dataclass(frozen=True)
class Candidate:
    """One sampled translation of one line, with its annotations.

    ``length`` and ``rhyme`` are expected to come from
    :func:`~lyricopt.textproc.count_chinese_length` and
    :func:`~lyricopt.textproc.rhyme_class`; the generator guarantees this.
    """

    text: str
    length: int
    rhyme: RhymeClass
    r_bas: float
    r_adv: float
    pass_tag: str = "first"

    def __post_init__(self):
        if self.length < 0:
            raise ValueError("candidate length must be non-negative")
        check_score(self.r_bas)
        check_score(self.r_adv)
        if self.pass_tag not in PASS_TAGS:
            raise ValueError(f"pass_tag must be one of {PASS_TAGS}")

    def to_dict(self) -> dict:
        return {
            "text": self.text,
            "length": self.length,
            "rhyme_class": self.rhyme.name,
            "r_bas": self.r_bas,
            "r_adv": self.r_adv,
            "pass": self.pass_tag,
        }


@dataclass(frozen=True)
class LossWeights:
    lambda1: float = 2.0
    lambda2: float = 3.0
    lambda3: float = 1.0
    lambda4: float = 1.0
    beta: float = 2.0
    hard_basic_floor: float = 3.0

    def __post_init__(self):
        for name in ("lambda1", "lambda2", "lambda3", "lambda4"):
            value = getattr(self, name)
            if not value >= 0:
                raise ValueError(f"{name} must be non-negative, got {value}")
        if not self.beta >= 1:
            raise ValueError(f"beta must be >= 1, got {self.beta}")

    def scaled(self, factor: float) -> "LossWeights":
        """Same weights with every lambda multiplied by ``factor``."""
        if factor <= 0:
            raise ValueError("scale factor must be positive")
        return replace(
            self,
            lambda1=self.lambda1 * factor,
            lambda2=self.lambda2 * factor,
            lambda3=self.lambda3 * factor,
            lambda4=self.lambda4 * factor,
        )


DEFAULT_WEIGHTS = LossWeights()


@dataclass(frozen=True)
class LossTerms:
    rhyme: float
    length: float
    adv: float
    bas: float

    @property
    def total(self) -> float:
        return self.rhyme + self.length + self.adv + self.bas

    def to_dict(self) -> dict:
        return {
            "rhyme": self.rhyme,
            "length": self.length,
            "adv": self.adv,
            "bas": self.bas,
            "total": self.total,
        }


@dataclass(frozen=True)
class ParagraphSolution:
    chosen: tuple[Candidate, ...]
    rhyme: RhymeClass
    total_loss: float
    breakdown: tuple[LossTerms, ...]

    @property
    def texts(self) -> list[str]:
        return [c.text for c in self.chosen]

    def to_dict(self) -> dict:
        return {
            "chosen": self.texts,
            "rhyme_class": self.rhyme.name,
            "total_loss": self.total_loss,
            "breakdown": [t.to_dict() for t in self.breakdown],
        }


def length_deviation(gt: int, length: int, beta: float = DEFAULT_WEIGHTS.beta) -> float:
    """Asymmetric length penalty; running long costs ``beta`` per character."""
    if length >= gt:
        return beta * (length - gt)
    return float(gt - length)


def rhyme_mismatch(rhyme: RhymeClass, target: RhymeClass) -> bool:
    # Unknown never rhymes, not even with Unknown
    return rhyme.is_unknown or rhyme != target


def loss_terms(
    c: Candidate, spec: SentenceSpec, target_rhyme: RhymeClass, w: LossWeights
) -> LossTerms:
    return LossTerms(
        rhyme=w.lambda1 if rhyme_mismatch(c.rhyme, target_rhyme) else 0.0,
        length=w.lambda2 * length_deviation(spec.target_length, c.length, w.beta),
        adv=-w.lambda3 * c.r_adv,
        bas=-w.lambda4 * c.r_bas,
    )


def sentence_loss(
    c: Candidate,
    spec: SentenceSpec,
    target_rhyme: RhymeClass,
    w: LossWeights = DEFAULT_WEIGHTS,
) -> float:
    return loss_terms(c, spec, target_rhyme, w).total


def _check_aligned(items: Sequence, specs: Sequence[SentenceSpec], what: str) -> None:
    if len(items) != len(specs):
        raise ValueError(f"{what} has {len(items)} entries but there are {len(specs)} sentences")
    if not specs:
        raise ValueError("paragraph must contain at least one sentence")


def _solution(
    selection: Sequence[Candidate], specs: Sequence[SentenceSpec], w: LossWeights
) -> ParagraphSolution:
    target = selection[-1].rhyme
    terms = tuple(loss_terms(c, s, target, w) for c, s in zip(selection, specs))
    return ParagraphSolution(
        chosen=tuple(selection),
        rhyme=target,
        total_loss=sum(t.total for t in terms),
        breakdown=terms,
    )


def paragraph_loss(
    selection: Sequence[Candidate],
    specs: Sequence[SentenceSpec],
    w: LossWeights = DEFAULT_WEIGHTS,
) -> float:
    """Loss of one candidate per sentence; the last line sets the rhyme."""
    _check_aligned(selection, specs, "selection")
    return _solution(selection, specs, w).total_loss


# --- feasibility ----------------------------------------------------------


def dedupe(pool: Iterable[Candidate]) -> list[Candidate]:
    """Drop candidates whose text already appeared earlier in the pool."""
    seen: set[str] = set()
    out = []
    for c in pool:
        if c.text not in seen:
            seen.add(c.text)
            out.append(c)
    return out


def apply_floor(pool: Sequence[Candidate], floor: float) -> list[Candidate]:
    """Keep candidates with ``r_bas >= floor``.

    If none qualifies, keep the candidates tied for the highest ``r_bas``
    so the sentence still has something to choose from.
    """
    kept = [c for c in pool if c.r_bas >= floor]
    if kept:
        return kept
    top = max(c.r_bas for c in pool)
    return [c for c in pool if c.r_bas == top]


def feasible_pools(
    pools: Sequence[Sequence[Candidate]],
    w: LossWeights = DEFAULT_WEIGHTS,
    *,
    apply_hard_floor: bool = True,
) -> list[list[Candidate]]:
    out = []
    for i, pool in enumerate(pools):
        pool = dedupe(pool)
        if not pool:
            raise EmptyPoolError(i)
        out.append(apply_floor(pool, w.hard_basic_floor) if apply_hard_floor else pool)
    return out


# --- search ---------------------------------------------------------------


def _tie_key(c: Candidate, position: int, spec: SentenceSpec) -> tuple:
    return (-c.r_bas, -c.r_adv, abs(c.length - spec.target_length), position)


def _matches(solution: ParagraphSolution) -> int:
    if solution.rhyme.is_unknown:
        return 0
    return sum(1 for c in solution.chosen if c.rhyme == solution.rhyme)


def _class_key(solution: ParagraphSolution) -> tuple:
    return (solution.total_loss, -_matches(solution), solution.rhyme.id)


def _candidate_classes(
    last_pool: Sequence[Candidate], rhyme_fixed: RhymeClass | None
) -> list[RhymeClass]:
    present = sorted({c.rhyme for c in last_pool}, key=lambda r: r.id)
    if rhyme_fixed is not None and rhyme_fixed in present:
        return [rhyme_fixed]
    return present


def _prepare(pools, specs, w, assume_feasible):
    _check_aligned(pools, specs, "pools")
    return feasible_pools(pools, w, apply_hard_floor=not assume_feasible)


def optimize(
    pools: Sequence[Sequence[Candidate]],
    specs: Sequence[SentenceSpec],
    w: LossWeights = DEFAULT_WEIGHTS,
    rhyme_fixed: RhymeClass | None = None,
    *,
    assume_feasible: bool = False,
) -> ParagraphSolution:
    """Exact minimizer of :func:`paragraph_loss` over the candidate pools.

    Pools are deduplicated by text and reduced to candidates meeting
    ``w.hard_basic_floor`` (see :func:`apply_floor`). Pass
    ``assume_feasible=True`` for pools that were already floor-filtered.

    With ``rhyme_fixed`` the last line is restricted to that class; if the
    last pool has no candidate of that class every class is tried.
    """
    pools = _prepare(pools, specs, w, assume_feasible)
    n = len(pools)
    best: ParagraphSolution | None = None
    for r in _candidate_classes(pools[-1], rhyme_fixed):
        selection = []
        for i, (pool, spec) in enumerate(zip(pools, specs)):
            options = (
                (pos, c) for pos, c in enumerate(pool) if i < n - 1 or c.rhyme == r
            )
            _, pick = min(
                options,
                key=lambda pc: (sentence_loss(pc[1], spec, r, w), *_tie_key(pc[1], pc[0], spec)),
            )
            selection.append(pick)
        solution = _solution(selection, specs, w)
        if best is None or _class_key(solution) < _class_key(best):
            best = solution
    assert best is not None
    return best


def brute_force_optimize(
    pools: Sequence[Sequence[Candidate]],
    specs: Sequence[SentenceSpec],
    w: LossWeights = DEFAULT_WEIGHTS,
    rhyme_fixed: RhymeClass | None = None,
    *,
    cap: int = 10**6,
    assume_feasible: bool = False,
) -> ParagraphSolution:
    """Exhaustive search over every combination, same filter and tie order.

    Raises :class:`SearchCapExceeded` before doing any work when the number
    of combinations exceeds ``cap``.
    """
    pools = _prepare(pools, specs, w, assume_feasible)
    size = math.prod(len(p) for p in pools)
    if size > cap:
        raise SearchCapExceeded(f"{size} combinations exceeds the cap of {cap}")

    allowed = set(_candidate_classes(pools[-1], rhyme_fixed))
    # loss of every candidate for every possible target class
    table = {
        r: [[sentence_loss(c, s, r, w) for c in pool] for pool, s in zip(pools, specs)]
        for r in allowed
    }
    ties = [[_tie_key(c, pos, s) for pos, c in enumerate(pool)] for pool, s in zip(pools, specs)]

    best_in_class: dict[RhymeClass, tuple] = {}
    for combo in itertools.product(*(range(len(p)) for p in pools)):
        r = pools[-1][combo[-1]].rhyme
        if r not in allowed:
            continue
        losses = table[r]
        total = sum(losses[i][j] for i, j in enumerate(combo))
        key = (total, tuple(ties[i][j] for i, j in enumerate(combo)))
        incumbent = best_in_class.get(r)
        if incumbent is None or key < incumbent[0]:
            best_in_class[r] = (key, combo)

    best: ParagraphSolution | None = None
    for r, (_, combo) in best_in_class.items():
        solution = _solution([pools[i][j] for i, j in enumerate(combo)], specs, w)
        if best is None or _class_key(solution) < _class_key(best):
            best = solution
    assert best is not None
    return best


__all__ = [
    "DEFAULT_WEIGHTS",
    "UNKNOWN",
    "Candidate",
    "EmptyPoolError",
    "LossTerms",
    "LossWeights",
    "ParagraphSolution",
    "SearchCapExceeded",
    "SentenceSpec",
    "apply_floor",
    "brute_force_optimize",
    "dedupe",
    "feasible_pools",
    "length_deviation",
    "loss_terms",
    "optimize",
    "paragraph_loss",
    "sentence_loss",
]
