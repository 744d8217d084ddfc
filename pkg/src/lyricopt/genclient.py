"""Candidate generation: prompts, sampling parameters and backends."""
from __future__ import annotations

import hashlib
import json
import os
import random
import threading
from dataclasses import dataclass, field
from typing import Mapping, Protocol, Sequence

import httpx

from .lossopt import Candidate, EmptyPoolError, SentenceSpec, dedupe
from .rewards import Scorer, score_advanced, score_basic
from .textproc import (
    RHYME_CLASSES,
    PinyinTable,
    RhymeClass,
    RhymeTable,
    count_chinese_length,
    rhyme_class,
)

LENGTH_PROMPT = (
    "I will give you an English lyric and you need to translate it into Chinese with "
    "exactly [length] characters. Please only output the translated results and nothing "
    "more. The English lyrics are: [original lyrics]. Then the translation result is: "
)

RHYME_PROMPT = (
    "I will give you an English lyric and you need to translate it into Chinese with "
    "exactly [length] characters, where the ending rhyme type is [rhyme]. Please only "
    "output the translated results and nothing more. The English lyrics are: "
    "[original lyrics]. Then the translation result is: "
)


class GenerationError(RuntimeError):
    def __init__(self, index: int, message: str):
        super().__init__(f"sentence {index}: {message}")
        self.index = index


@dataclass(frozen=True)
class GenerationParams:
    temperature: float = 0.7
    top_p: float = 0.95
    n_samples: int = 40
    max_tokens: int = 64

    def __post_init__(self):
        if not self.temperature > 0:
            raise ValueError("temperature must be positive")
        if not 0 < self.top_p <= 1:
            raise ValueError("top_p must lie in (0, 1]")
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be >= 1")


def build_prompt(spec: SentenceSpec, rhyme: RhymeClass | None = None) -> str:
    if spec.target_length < 1:
        raise ValueError("target_length must be >= 1")
    template = LENGTH_PROMPT
    if rhyme is not None:
        if rhyme.is_unknown:
            raise ValueError("cannot condition a prompt on the Unknown rhyme class")
        template = RHYME_PROMPT.replace("[rhyme]", rhyme.name)
    return template.replace("[length]", str(spec.target_length)).replace(
        "[original lyrics]", spec.source
    )


def stable_seed(*parts: object) -> int:
    """64-bit seed from JSON-serialisable parts, stable across processes."""
    blob = json.dumps(parts, ensure_ascii=False, sort_keys=True).encode("utf-8")
    return int.from_bytes(hashlib.blake2b(blob, digest_size=8).digest(), "big")


class Generator(Protocol):
    def generate(
        self,
        prompt: str,
        *,
        spec: SentenceSpec,
        rhyme: RhymeClass | None,
        n: int,
        params: GenerationParams,
        seed: int,
    ) -> list[str]: ...


# --- mock backend -----------------------------------------------------------

# Characters whose primary final falls in each class of the shipped tables.
MOCK_ENDINGS: dict[str, str] = {
    "发花": "花家他下话霞沙涯纱",
    "梭波": "我说歌波河火锅落朵",
    "乜斜": "夜月雪写别街蝶谢叶",
    "一七": "起里时诗去雨地你泥",
    "姑苏": "路苦哭步土湖树舞鼓",
    "怀来": "来爱怀海外开在彩白",
    "灰堆": "泪飞回醉水归美追悲",
    "遥条": "笑好桥飘老遥照鸟跑",
    "由求": "走秋手愁留游流头候",
    "言前": "天远晚山前年边现变",
    "人辰": "心人魂云真门春深林",
    "江阳": "唱强光方长香阳乡墙",
    "中东": "梦情风红星灯中声明",
}

MOCK_FILLER = "我们你在这那里风吹雨打山海云天心中梦想花开月光星夜路上歌声时候春秋世界生命未来自由光明温柔青春岁月年华故乡远方"

_LENGTH_OFFSETS = (-2, -1, 0, 1, 2)
_LENGTH_WEIGHTS = (1, 2, 4, 2, 1)


@dataclass(frozen=True)
class MockGenerator:
    """Seeded template generator; no I/O.

    Modes:

    ``default``
        Lengths scatter around the target (offsets -2..2, weighted toward 0),
        endings are drawn from all classes, or from the requested class with
        probability ``on_rhyme_prob``.
    ``exhaustive``
        The first 13 samples are exact-length lines, one per rhyme class;
        the remainder are drawn as in ``default``.
    ``impoverished``
        Like ``default`` but each sentence only ever ends in ``classes_per_sentence``
        classes, chosen from the English line (or given in ``allowed``, keyed by
        sentence index, as class ids). Requests for other classes are ignored.

    Output is a pure function of (spec, rhyme, seed, params, configuration).
    """

    mode: str = "default"
    on_rhyme_prob: float = 0.8
    repeat_prob: float = 0.1
    empty_prob: float = 0.0
    classes_per_sentence: int = 2
    allowed: Mapping[int, Sequence[int]] | None = None
    fail_on: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self):
        if self.mode not in ("default", "exhaustive", "impoverished"):
            raise ValueError(f"unknown mock generator mode: {self.mode!r}")

    def allowed_classes(self, spec: SentenceSpec) -> list[RhymeClass]:
        if self.mode != "impoverished":
            return list(RHYME_CLASSES)
        if self.allowed is not None and spec.index in self.allowed:
            return [RHYME_CLASSES[i] for i in self.allowed[spec.index]]
        rng = random.Random(stable_seed("allowed", spec.source, spec.index))
        k = max(1, min(self.classes_per_sentence, len(RHYME_CLASSES)))
        return sorted(rng.sample(RHYME_CLASSES, k), key=lambda r: r.id)

    def _line(self, rng: random.Random, length: int, rc: RhymeClass, repeat: bool) -> str:
        ending = rng.choice(MOCK_ENDINGS[rc.name])
        body_len = length - 1
        pool = [ch for ch in MOCK_FILLER if ch != ending]
        if body_len <= len(pool):
            body = rng.sample(pool, body_len)
        else:
            body = [rng.choice(pool) for _ in range(body_len)]
        if repeat and body_len >= 2:
            body[1] = body[0]
        return "".join(body) + ending

    def generate(
        self,
        prompt: str,
        *,
        spec: SentenceSpec,
        rhyme: RhymeClass | None,
        n: int,
        params: GenerationParams,
        seed: int,
    ) -> list[str]:
        if spec.source in self.fail_on:
            raise RuntimeError("mock backend failure")
        rng = random.Random(
            stable_seed(
                seed,
                spec.source,
                spec.index,
                spec.target_length,
                None if rhyme is None else rhyme.id,
                params.temperature,
                params.top_p,
            )
        )
        classes = self.allowed_classes(spec)
        out: list[str] = []
        if self.mode == "exhaustive":
            for rc in RHYME_CLASSES[:n]:
                out.append(self._line(rng, spec.target_length, rc, repeat=False))
        while len(out) < n:
            if rng.random() < self.empty_prob:
                out.append("")
                continue
            length = max(1, spec.target_length + rng.choices(_LENGTH_OFFSETS, _LENGTH_WEIGHTS)[0])
            if rhyme is not None and rhyme in classes and rng.random() < self.on_rhyme_prob:
                rc = rhyme
            else:
                rc = rng.choice(classes)
            out.append(self._line(rng, length, rc, repeat=rng.random() < self.repeat_prob))
        return out


# --- http backend -----------------------------------------------------------


class HttpGenerator:
    """Completion service behind a minimal JSON contract.

    Request: ``{"prompt", "n", "temperature", "top_p", "max_tokens"}``.
    Response: a JSON list of strings, or an object with ``texts`` (list of
    strings) or OpenAI-style ``choices[].text``. One retry per request.
    """

    def __init__(
        self,
        endpoint: str,
        *,
        api_key_env: str | None = None,
        timeout: float = 60.0,
        batch_size: int | None = None,
        parallelism: int = 8,
        retries: int = 1,
        client: httpx.Client | None = None,
    ):
        if not endpoint:
            raise ValueError("http generator needs a non-empty endpoint")
        self.endpoint = endpoint
        self.api_key_env = api_key_env
        self.batch_size = batch_size
        self.retries = retries
        self._client = client or httpx.Client(timeout=timeout)
        self._slots = threading.BoundedSemaphore(max(1, parallelism))

    def _headers(self) -> dict[str, str]:
        if self.api_key_env and os.environ.get(self.api_key_env):
            return {"Authorization": f"Bearer {os.environ[self.api_key_env]}"}
        return {}

    @staticmethod
    def _texts(payload) -> list[str]:
        if isinstance(payload, dict):
            if "texts" in payload:
                payload = payload["texts"]
            elif "choices" in payload:
                payload = [choice.get("text", "") for choice in payload["choices"]]
        if not isinstance(payload, list) or not all(isinstance(t, str) for t in payload):
            raise ValueError("response is not a list of generated texts")
        return payload

    def _request(self, prompt: str, n: int, params: GenerationParams) -> list[str]:
        body = {
            "prompt": prompt,
            "n": n,
            "temperature": params.temperature,
            "top_p": params.top_p,
            "max_tokens": params.max_tokens,
        }
        last_error: Exception | None = None
        for _ in range(self.retries + 1):
            try:
                with self._slots:
                    resp = self._client.post(self.endpoint, json=body, headers=self._headers())
                resp.raise_for_status()
                return self._texts(resp.json())
            except httpx.HTTPStatusError as exc:
                if exc.response.status_code < 500:
                    raise
                last_error = exc
            except (httpx.HTTPError, ValueError) as exc:
                last_error = exc
        assert last_error is not None
        raise last_error

    def generate(
        self,
        prompt: str,
        *,
        spec: SentenceSpec,
        rhyme: RhymeClass | None,
        n: int,
        params: GenerationParams,
        seed: int,
    ) -> list[str]:
        step = self.batch_size or n
        texts: list[str] = []
        for start in range(0, n, step):
            texts.extend(self._request(prompt, min(step, n - start), params))
        return texts


def make_generator(config: Mapping | None = None) -> Generator:
    """Build a generator from a ``{"kind": "mock" | "http", ...}`` mapping."""
    config = dict(config or {})
    kind = config.pop("kind", "mock")
    if kind == "mock":
        if "fail_on" in config:
            config["fail_on"] = frozenset(config["fail_on"])
        return MockGenerator(**config)
    if kind == "http":
        return HttpGenerator(**config)
    raise ValueError(f"unknown generator kind: {kind!r}")


# --- candidate pools --------------------------------------------------------


def annotate(
    text: str,
    spec: SentenceSpec,
    scorer: Scorer,
    *,
    context: str = "",
    pass_tag: str = "first",
    table: PinyinTable | None = None,
    rhymes: RhymeTable | None = None,
) -> Candidate:
    return Candidate(
        text=text,
        length=count_chinese_length(text),
        rhyme=rhyme_class(text, table, rhymes),
        r_bas=score_basic(spec.source, text, context, scorer, length_hint=spec.target_length),
        r_adv=score_advanced(text, scorer),
        pass_tag=pass_tag,
    )


def generate_candidates(
    spec: SentenceSpec,
    rhyme: RhymeClass | None,
    generator: Generator,
    params: GenerationParams,
    scorer: Scorer,
    table: PinyinTable | None = None,
    rhymes: RhymeTable | None = None,
    *,
    seed: int = 0,
    pass_tag: str = "first",
    context: str = "",
) -> list[Candidate]:
    """Sample ``params.n_samples`` translations of one line and annotate them.

    Outputs are stripped, empties dropped and duplicates removed (first
    sample wins), so the pool keeps sampling order.
    """
    prompt = build_prompt(spec, rhyme)
    try:
        raw = generator.generate(
            prompt, spec=spec, rhyme=rhyme, n=params.n_samples, params=params, seed=seed
        )
    except Exception as exc:
        raise GenerationError(spec.index, f"generation failed: {exc}") from exc

    texts = []
    seen = set()
    for text in raw:
        text = text.strip()
        if text and text not in seen:
            seen.add(text)
            texts.append(text)
    if not texts:
        raise EmptyPoolError(spec.index, f"all samples for sentence {spec.index} were empty")

    pool = []
    for text in texts:
        try:
            pool.append(
                annotate(
                    text,
                    spec,
                    scorer,
                    context=context,
                    pass_tag=pass_tag,
                    table=table,
                    rhymes=rhymes,
                )
            )
        except Exception as exc:
            raise GenerationError(spec.index, f"scoring failed: {exc}") from exc
    return dedupe(pool)
