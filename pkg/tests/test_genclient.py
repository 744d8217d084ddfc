import json

import httpx
import pytest

from lyricopt.genclient import (
    LENGTH_PROMPT,
    MOCK_ENDINGS,
    GenerationError,
    GenerationParams,
    HttpGenerator,
    MockGenerator,
    build_prompt,
    generate_candidates,
    make_generator,
    stable_seed,
)
from lyricopt.lossopt import EmptyPoolError, SentenceSpec
from lyricopt.rewards import MockScorer
from lyricopt.textproc import RHYME_CLASSES, UNKNOWN, count_chinese_length, rhyme_class

SPEC = SentenceSpec(2, "Say you'll share with me", 6)
JIANGYANG = RHYME_CLASSES[11]


def test_length_prompt():
    prompt = build_prompt(SPEC)
    assert "exactly 6 characters" in prompt
    assert "The English lyrics are: Say you'll share with me." in prompt
    assert "rhyme" not in prompt
    assert prompt.endswith("Then the translation result is: ")


def test_rhyme_prompt():
    prompt = build_prompt(SPEC, JIANGYANG)
    assert "exactly 6 characters, where the ending rhyme type is 江阳." in prompt
    assert "[" not in prompt


def test_unknown_rhyme_prompt_is_rejected():
    with pytest.raises(ValueError):
        build_prompt(SPEC, UNKNOWN)


def test_prompt_template_placeholders():
    assert "[length]" in LENGTH_PROMPT and "[original lyrics]" in LENGTH_PROMPT


@pytest.mark.parametrize("kw", [{"temperature": 0}, {"top_p": 1.5}, {"n_samples": 0}, {"max_tokens": 0}])
def test_params_validation(kw):
    with pytest.raises(ValueError):
        GenerationParams(**kw)


def test_stable_seed():
    assert stable_seed(7, "song", ["a"]) == stable_seed(7, "song", ["a"])
    assert stable_seed(7, "song") != stable_seed(8, "song")
    assert 0 <= stable_seed("x") < 2**64


def test_mock_endings_land_in_their_class():
    for name, chars in MOCK_ENDINGS.items():
        for ch in chars:
            assert rhyme_class(ch).name == name, ch


def pool(generator=None, rhyme=None, n=40, seed=3, spec=SPEC, **kw):
    return generate_candidates(
        spec,
        rhyme,
        generator or MockGenerator(),
        GenerationParams(n_samples=n),
        MockScorer(),
        seed=seed,
        **kw,
    )


def test_mock_is_deterministic():
    assert pool() == pool()
    assert pool(seed=3) != pool(seed=4)


def test_exhaustive_annotations():
    cands = pool(MockGenerator(mode="exhaustive"), n=13)
    assert len(cands) == 13
    assert [c.rhyme for c in cands] == list(RHYME_CLASSES)
    assert all(c.length == SPEC.target_length for c in cands)


def test_single_class_mock():
    gen = MockGenerator(mode="impoverished", allowed={SPEC.index: [4]})
    cands = pool(gen)
    assert {c.rhyme for c in cands} == {RHYME_CLASSES[4]}


def test_annotations_match_textproc():
    for c in pool(rhyme=JIANGYANG, pass_tag="second"):
        assert c.length == count_chinese_length(c.text)
        assert c.rhyme == rhyme_class(c.text)
        assert 1 <= c.r_bas <= 4 and 1 <= c.r_adv <= 4
        assert c.pass_tag == "second"


def test_rhyme_request_biases_endings():
    cands = pool(rhyme=JIANGYANG)
    assert sum(c.rhyme == JIANGYANG for c in cands) > len(cands) / 2


def test_at_most_n_after_dedup():
    cands = pool(n=40)
    assert len(cands) <= 40
    assert len({c.text for c in cands}) == len(cands)


class Canned:
    def __init__(self, texts=None, error=None):
        self.texts, self.error = texts, error

    def generate(self, prompt, **kw):
        if self.error:
            raise self.error
        return list(self.texts)


def test_strip_and_dedupe_keep_order():
    cands = pool(Canned(["  唱首歌 ", "", "唱首歌", "一起唱"]))
    assert [c.text for c in cands] == ["唱首歌", "一起唱"]


def test_all_empty_samples():
    with pytest.raises(EmptyPoolError) as info:
        pool(Canned(["", "  "]))
    assert info.value.index == SPEC.index


def test_backend_failure_carries_index():
    with pytest.raises(GenerationError) as info:
        pool(Canned(error=RuntimeError("down")))
    assert info.value.index == SPEC.index
    with pytest.raises(GenerationError):
        pool(MockGenerator(fail_on=frozenset({SPEC.source})))


def http_generator(handler, **kw):
    client = httpx.Client(transport=httpx.MockTransport(handler))
    return HttpGenerator("http://gen.test/v1", client=client, **kw)


def test_http_generator_contract():
    bodies = []

    def handler(request):
        body = json.loads(request.content)
        bodies.append(body)
        start = sum(b["n"] for b in bodies[:-1])
        return httpx.Response(200, json={"texts": [f"唱歌{start + i}" for i in range(body["n"])]})

    cands = pool(http_generator(handler, batch_size=4), n=10)
    assert [b["n"] for b in bodies] == [4, 4, 2]
    assert bodies[0]["temperature"] == 0.7 and bodies[0]["top_p"] == 0.95
    assert bodies[0]["prompt"] == build_prompt(SPEC)
    assert len(cands) == 10


@pytest.mark.parametrize(
    "payload", [["甲", "乙"], {"texts": ["甲", "乙"]}, {"choices": [{"text": "甲"}, {"text": "乙"}]}]
)
def test_http_generator_reply_shapes(payload):
    gen = http_generator(lambda r: httpx.Response(200, json=payload))
    assert [c.text for c in pool(gen, n=2)] == ["甲", "乙"]


def test_http_generator_retries_once():
    calls = []

    def handler(request):
        calls.append(1)
        return httpx.Response(502)

    with pytest.raises(GenerationError) as info:
        pool(http_generator(handler), n=2)
    assert len(calls) == 2 and info.value.index == SPEC.index


def test_http_generator_recovers():
    replies = iter([httpx.Response(500), httpx.Response(200, json=["好的"])])
    assert [c.text for c in pool(http_generator(lambda r: next(replies)), n=1)] == ["好的"]


def test_make_generator():
    gen = make_generator({"kind": "mock", "mode": "exhaustive", "fail_on": ["x"]})
    assert isinstance(gen, MockGenerator) and gen.fail_on == frozenset({"x"})
    assert isinstance(make_generator({"kind": "http", "endpoint": "http://x"}), HttpGenerator)
    with pytest.raises(ValueError):
        make_generator({"kind": "carrier pigeon"})
    with pytest.raises(ValueError):
        MockGenerator(mode="chaotic")
