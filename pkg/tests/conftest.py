from __future__ import annotations

import random
from pathlib import Path

import pytest
from hypothesis import strategies as st

from lyricopt.lossopt import Candidate, SentenceSpec
from lyricopt.textproc import RHYME_CLASSES, UNKNOWN

DATA = Path(__file__).parent / "data"

# Scores on a quarter grid are exact in binary floating point, so loss sums
# tie exactly when they tie mathematically.
SCORE_GRID = [1 + k / 4 for k in range(13)]
RHYME_POOL = [*RHYME_CLASSES[:4], UNKNOWN]


def make_candidate(text, length, rhyme, r_bas=3.0, r_adv=2.0, pass_tag="first"):
    return Candidate(text, length, rhyme, r_bas, r_adv, pass_tag)


def random_instance(rng: random.Random, max_n: int = 4, max_k: int = 5, rhymes=RHYME_POOL):
    n = rng.randint(1, max_n)
    specs = [SentenceSpec(i, f"line {i}", rng.randint(1, 8)) for i in range(n)]
    pools = []
    for i in range(n):
        pools.append(
            [
                make_candidate(
                    f"s{i}c{j}",
                    rng.randint(0, 10),
                    rng.choice(rhymes),
                    rng.choice(SCORE_GRID),
                    rng.choice(SCORE_GRID),
                )
                for j in range(rng.randint(1, max_k))
            ]
        )
    return pools, specs


@st.composite
def instances(draw, max_n: int = 4, max_k: int = 5):
    n = draw(st.integers(1, max_n))
    specs = [SentenceSpec(i, f"line {i}", draw(st.integers(1, 8))) for i in range(n)]
    pools = []
    for i in range(n):
        k = draw(st.integers(1, max_k))
        pools.append(
            [
                make_candidate(
                    f"s{i}c{j}",
                    draw(st.integers(0, 10)),
                    draw(st.sampled_from(RHYME_POOL)),
                    draw(st.sampled_from(SCORE_GRID)),
                    draw(st.sampled_from(SCORE_GRID)),
                )
                for j in range(k)
            ]
        )
    return pools, specs


@pytest.fixture
def rng():
    return random.Random(20240101)


# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_RESULTS: list[str] = []


@pytest.fixture
def criterion(request):
    def record(number: int, passed: bool, detail: str) -> None:
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {detail}"
        ACCEPTANCE_RESULTS.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_RESULTS, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
