"""Translation quality scoring (basic and advanced) and annotation records.

Two scorer kinds are provided:

``MockScorer``
    Deterministic heuristics, no I/O.

    * basic: ``4.0`` minus penalties for non-CJK content, repeated
      characters and length deviation from a hint (the English syllable
      count unless given), minus a small text-hash jitter in ``[0, 0.25)``;
      clamped to ``[1, 4]``.
    * advanced: ``2.0 + 1.5 * distinct_ratio * min(1, (n - 1) / 5)`` where
      ``n`` is the number of CJK characters, so one-character lines stay
      at 2.0.

``HttpScorer``
    Renders the grader prompts and posts them to a completion endpoint.
"""
from __future__ import annotations

import hashlib
import json
import os
import re
import threading
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Protocol

import httpx

from .textproc import cjk_chars, count_chinese_length, count_syllables

MIN_SCORE = 1.0
MAX_SCORE = 4.0

BASIC_PROMPT = (
    "You are a translation grader. Given English lyrics and a corresponding Chinese "
    "translation, you need to give scores in the range of 1-4 (4 is the highest) "
    "considering both fluency and translation accuracy.  Here are the metrics:\n"
    "Score 1: Not very fluent. There are inappropriate or awkward phrases or other big flaws.\n"
    "Score 2: Quite fluent, but there are serious translation mistakes that need correction.\n"
    "Score 3: Quite fluent, no big mistake in translation. But there are still small "
    "mistakes in phrasing or the translation of idioms.\n"
    "Score 4: Very fluent, no mistakes, and excellent translation.\n"
    "Note that a score of 4 means excellent and should be only given if you are "
    "absolutely sure the translated sentence is perfect. Any tiny mistake will make its "
    "score less than 4.\n"
    "Now, I will provide you with the English lyrics and the Chinese translation. You "
    "need to give me only one number and nothing else. For a comprehensive "
    "understanding, I will provide you the context: [paragraph].\n"
    "The English lyrics is: [original lyrics].\n"
    "The Chinese translation is: [translation]. The score is: "
)

ADVANCED_PROMPT = (
    "You are a translation grader. Given a Chinese translation of lyrics, you need to "
    "give scores in the range 1-4 (4 is the highest) for whether it looks like good "
    "lyrics. Criteria for scoring:\n"
    "Score 1: The translation does not resonate as good lyrics.\n"
    "Score 2: Acceptable as lyrics, but mundane and unremarkable.\n"
    "Score 3: Good fit for lyrics with some literary flair and aesthetic language.\n"
    "Score 4: Outstanding lyrical quality, inventive, expressive, and captivating.\n"
    "Reserve a score of 4 for truly impressive lyricism and be prudent when giving 4. "
    "Regular conversational phrases typically merit a score of 2.\n"
    "Now, I will provide you with the Chinese translation. You need to give me only one "
    "number and nothing else. The Chinese translation is: [translation].\n"
    "The score is: "
)


class InvalidInputError(ValueError):
    pass


class RemoteScoringError(RuntimeError):
    pass


def check_score(value: float) -> float:
    value = float(value)
    if not MIN_SCORE <= value <= MAX_SCORE:
        raise ValueError(f"quality score {value} outside [{MIN_SCORE}, {MAX_SCORE}]")
    return value


# --- annotation records ---------------------------------------------------


@dataclass(frozen=True)
class ScoredPair:
    english: str
    chinese: str
    context: str
    fluency: int
    accuracy: int
    literacy: int

    def __post_init__(self):
        if not self.english or not self.chinese:
            raise InvalidInputError("english and chinese must be non-empty")
        for name in ("fluency", "accuracy", "literacy"):
            _check_rubric(getattr(self, name), name)

    @property
    def basic_label(self) -> int:
        return map_basic(self.fluency, self.accuracy)

    @property
    def advanced_label(self) -> int:
        return map_advanced(self.literacy)

    @classmethod
    def from_dict(cls, record: Mapping) -> "ScoredPair":
        return cls(
            english=record["english"],
            chinese=record["chinese"],
            context=record.get("context", ""),
            fluency=record["fluency"],
            accuracy=record["accuracy"],
            literacy=record["literacy"],
        )

    def to_dict(self) -> dict:
        return asdict(self)


def read_scored_pairs(path: Path | str) -> Iterator[ScoredPair]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                yield ScoredPair.from_dict(json.loads(line))
            except (KeyError, TypeError, ValueError) as exc:
                raise InvalidInputError(f"{path}:{lineno}: {exc}") from exc


def write_scored_pairs(pairs: Iterable[ScoredPair], path: Path | str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for pair in pairs:
            fh.write(json.dumps(pair.to_dict(), ensure_ascii=False) + "\n")


# --- rubric mappings ------------------------------------------------------


def _check_rubric(value: int, name: str) -> None:
    if isinstance(value, bool) or not isinstance(value, int) or not 1 <= value <= 4:
        raise ValueError(f"{name} must be an integer in 1..4, got {value!r}")


def _default_basic_table() -> dict[tuple[int, int], int]:
    table = {}
    for fluency in range(1, 5):
        for accuracy in range(1, 5):
            if fluency <= 2:
                label = 1
            elif accuracy <= 2:
                label = 2
            elif accuracy == 3:
                label = 3
            else:
                label = 4
            table[fluency, accuracy] = label
    return table


# (fluency, accuracy) -> combined basic label; swap in another table to match
# different class counts.
BASIC_TABLE: dict[tuple[int, int], int] = _default_basic_table()


def map_basic(
    fluency: int, accuracy: int, table: Mapping[tuple[int, int], int] | None = None
) -> int:
    """Collapse a (fluency, accuracy) pair into a single 1-4 basic label.

    Low fluency dominates; otherwise accuracy stratifies the label.
    """
    _check_rubric(fluency, "fluency")
    _check_rubric(accuracy, "accuracy")
    return (table or BASIC_TABLE)[fluency, accuracy]


def map_advanced(literacy: int) -> int:
    """Literacy 1-2 -> 2, 3-4 -> 3."""
    _check_rubric(literacy, "literacy")
    return 2 if literacy <= 2 else 3


# --- scorers --------------------------------------------------------------


class Scorer(Protocol):
    def score_basic(
        self, english: str, chinese: str, context: str = "", length_hint: int | None = None
    ) -> float: ...

    def score_advanced(self, chinese: str) -> float: ...


def _require(**texts: str) -> None:
    for name, text in texts.items():
        if not text or not text.strip():
            raise InvalidInputError(f"{name} must be non-empty")


def _clamp(value: float) -> float:
    return min(MAX_SCORE, max(MIN_SCORE, value))


def _jitter(text: str) -> float:
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big") / 2**64 * 0.25


@dataclass(frozen=True)
class MockScorer:
    kind = "mock"
    non_cjk_penalty: float = 2.0
    repeat_penalty: float = 0.5
    length_penalty: float = 0.5
    jitter: bool = True

    def score_basic(
        self, english: str, chinese: str, context: str = "", length_hint: int | None = None
    ) -> float:
        _require(english=english, chinese=chinese)
        visible = [ch for ch in chinese if not ch.isspace() and ch.isalnum()]
        chars = cjk_chars(chinese)
        non_cjk_ratio = (len(visible) - len(chars)) / len(visible) if visible else 1.0
        repeats = sum(1 for a, b in zip(chars, chars[1:]) if a == b)
        hint = count_syllables(english) if length_hint is None else length_hint
        deviation = abs(count_chinese_length(chinese) - hint)

        score = MAX_SCORE
        score -= self.non_cjk_penalty * non_cjk_ratio
        score -= self.repeat_penalty * repeats
        score -= self.length_penalty * deviation
        if self.jitter:
            score -= _jitter(chinese)
        return _clamp(score)

    def score_advanced(self, chinese: str) -> float:
        _require(chinese=chinese)
        chars = cjk_chars(chinese)
        if not chars:
            return MIN_SCORE
        distinct_ratio = len(set(chars)) / len(chars)
        bonus = 1.5 * distinct_ratio * min(1.0, (len(chars) - 1) / 5)
        return _clamp(2.0 + bonus)


_INT_TOKEN = re.compile(r"-?\d+")


def parse_score(body: str) -> float:
    """First integer token of a grader reply, which must lie in 1..4."""
    match = _INT_TOKEN.search(body)
    if match is None:
        raise RemoteScoringError(f"non-numeric grader reply: {body[:80]!r}")
    value = int(match.group())
    if not 1 <= value <= 4:
        raise RemoteScoringError(f"grader reply out of range: {value}")
    return float(value)


def render_basic_prompt(english: str, chinese: str, context: str) -> str:
    return (
        BASIC_PROMPT.replace("[paragraph]", context)
        .replace("[original lyrics]", english)
        .replace("[translation]", chinese)
    )


def render_advanced_prompt(chinese: str) -> str:
    return ADVANCED_PROMPT.replace("[translation]", chinese)


class HttpScorer:
    """Grader behind an HTTP completion endpoint.

    Request body: ``{"prompt", "temperature": 0, "max_tokens"}``. The reply
    is either JSON with a ``score`` (continuous) or ``text`` field, or a
    plain text body; the first integer token in the text is the score.
    One retry on transport errors, 5xx and unparsable replies.
    """

    kind = "http"

    def __init__(
        self,
        endpoint: str,
        *,
        api_key_env: str | None = None,
        timeout: float = 30.0,
        max_tokens: int = 4,
        parallelism: int = 8,
        retries: int = 1,
        client: httpx.Client | None = None,
    ):
        if not endpoint:
            raise ValueError("http scorer needs a non-empty endpoint")
        self.endpoint = endpoint
        self.api_key_env = api_key_env
        self.max_tokens = max_tokens
        self.retries = retries
        self._client = client or httpx.Client(timeout=timeout)
        self._slots = threading.BoundedSemaphore(max(1, parallelism))

    def _headers(self) -> dict[str, str]:
        if self.api_key_env and os.environ.get(self.api_key_env):
            return {"Authorization": f"Bearer {os.environ[self.api_key_env]}"}
        return {}

    def _ask(self, prompt: str) -> float:
        payload = {"prompt": prompt, "temperature": 0, "max_tokens": self.max_tokens}
        last_error: Exception | None = None
        for _ in range(self.retries + 1):
            try:
                with self._slots:
                    resp = self._client.post(self.endpoint, json=payload, headers=self._headers())
            except httpx.HTTPError as exc:
                last_error = RemoteScoringError(f"scorer request failed: {exc}")
                continue
            if 400 <= resp.status_code < 500:
                raise RemoteScoringError(f"scorer rejected request: HTTP {resp.status_code}")
            if resp.status_code >= 500:
                last_error = RemoteScoringError(f"scorer returned HTTP {resp.status_code}")
                continue
            try:
                return self._parse(resp)
            except RemoteScoringError as exc:
                last_error = exc
        assert last_error is not None
        raise last_error

    @staticmethod
    def _parse(resp: httpx.Response) -> float:
        try:
            data = resp.json()
        except ValueError:
            return parse_score(resp.text)
        if isinstance(data, dict):
            if isinstance(data.get("score"), (int, float)) and not isinstance(data["score"], bool):
                try:
                    return check_score(data["score"])
                except ValueError as exc:
                    raise RemoteScoringError(str(exc)) from exc
            if isinstance(data.get("text"), str):
                return parse_score(data["text"])
        return parse_score(resp.text)

    def score_basic(
        self, english: str, chinese: str, context: str = "", length_hint: int | None = None
    ) -> float:
        _require(english=english, chinese=chinese)
        return self._ask(render_basic_prompt(english, chinese, context))

    def score_advanced(self, chinese: str) -> float:
        _require(chinese=chinese)
        return self._ask(render_advanced_prompt(chinese))


def score_basic(
    english: str,
    chinese: str,
    context: str,
    scorer: Scorer,
    length_hint: int | None = None,
) -> float:
    return check_score(scorer.score_basic(english, chinese, context, length_hint=length_hint))


def score_advanced(chinese: str, scorer: Scorer) -> float:
    return check_score(scorer.score_advanced(chinese))


def make_scorer(config: Mapping | None = None) -> Scorer:
    """Build a scorer from a ``{"kind": "mock" | "http", ...}`` mapping."""
    config = dict(config or {})
    kind = config.pop("kind", "mock")
    if kind == "mock":
        return MockScorer(**config)
    if kind == "http":
        return HttpScorer(**config)
    raise ValueError(f"unknown scorer kind: {kind!r}")


__all__ = [
    "ADVANCED_PROMPT",
    "BASIC_PROMPT",
    "BASIC_TABLE",
    "HttpScorer",
    "InvalidInputError",
    "MockScorer",
    "RemoteScoringError",
    "ScoredPair",
    "Scorer",
    "check_score",
    "make_scorer",
    "map_advanced",
    "map_basic",
    "parse_score",
    "read_scored_pairs",
    "score_advanced",
    "score_basic",
    "write_scored_pairs",
]
