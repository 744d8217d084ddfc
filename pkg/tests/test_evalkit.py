import pytest

from conftest import DATA
from lyricopt.evalkit import (
    EvalReport,
    bleu,
    evaluate_corpus,
    length_accuracy,
    paragraph_rhyme_score,
    rhyme_score,
    tokenize_zh,
)
from lyricopt.pipeline import ParagraphSpec
from lyricopt.rewards import MockScorer
from lyricopt.textproc import RHYME_CLASSES, UNKNOWN

A, B = RHYME_CLASSES[:2]

# sacrebleu 2.x, corpus_bleu(tokenize="zh", smooth_method="add-k", smooth_value=1)
FROZEN_BLEU_10 = 38.490963361850916


def bleu_set():
    rows = [line.rstrip("\n").split("\t") for line in (DATA / "bleu_10.tsv").open(encoding="utf-8")]
    return [r[0] for r in rows], [r[1] for r in rows]


def test_length_accuracy_two_of_three():
    assert abs(length_accuracy([5, 6, 7], [5, 6, 8]) - 0.6667) <= 1e-4
    assert length_accuracy([5, 6, 7], [5, 6, 8]) == 2 / 3


def test_length_accuracy_errors():
    with pytest.raises(ValueError):
        length_accuracy([], [])
    with pytest.raises(ValueError):
        length_accuracy([1], [1, 2])


def test_rhyme_score_plurality():
    assert rhyme_score([[A, A, B, A]]) == 0.75
    assert rhyme_score([[A, A, B, A], [B, B]]) == (0.75 + 1.0) / 2


def test_rhyme_score_unknown_never_groups():
    assert paragraph_rhyme_score([UNKNOWN, UNKNOWN, A]) == 1 / 3
    assert paragraph_rhyme_score([UNKNOWN, UNKNOWN]) == 0.0


def test_rhyme_score_last_anchor():
    assert paragraph_rhyme_score([A, A, A, B], anchor="last") == 0.25
    assert paragraph_rhyme_score([A, A, UNKNOWN], anchor="last") == 0.0
    with pytest.raises(ValueError):
        paragraph_rhyme_score([A], anchor="first")


def test_tokenize_zh():
    assert tokenize_zh("我爱 you，好吗") == ["我", "爱", "you", "，", "好", "吗"]


def test_bleu_identity_and_disjoint():
    h, _ = bleu_set()
    assert bleu(h, h) == pytest.approx(100.0)
    assert bleu(["天地"], ["山海"]) == 0.0


def test_bleu_matches_frozen_reference():
    h, r = bleu_set()
    assert abs(bleu(h, r) - FROZEN_BLEU_10) <= 0.1


def test_bleu_matches_live_reference():
    sacrebleu = pytest.importorskip("sacrebleu")
    h, r = bleu_set()
    ref = sacrebleu.corpus_bleu(h, [r], tokenize="zh", smooth_method="add-k", smooth_value=1).score
    assert abs(bleu(h, r) - ref) <= 0.1


def test_bleu_errors():
    with pytest.raises(ValueError):
        bleu([], [])
    with pytest.raises(ValueError):
        bleu(["a"], [])


def specs():
    return [
        ParagraphSpec.from_lines(["sing a song", "hello"], syllables=[3, 2], references=["唱首歌", "你好"]),
        ParagraphSpec.from_lines(["moonlight"], syllables=[2]),
    ]


def test_evaluate_corpus_counts_and_metrics():
    outputs = [["唱首歌", "你好吗"], ["月光"]]
    report = evaluate_corpus(outputs, specs(), references=[["唱首歌", "你好"], ["月光"]])
    assert report.lines == 3 and report.paragraphs == 2
    assert report.length_accuracy == 2 / 3
    assert report.bleu is not None and 0 < report.bleu <= 100
    assert "BLEU" in report.to_table()


def test_evaluate_without_references_has_no_bleu():
    report = evaluate_corpus([["唱首歌", "你好"], ["月光"]], specs())
    assert report.bleu is None
    assert "bleu" not in report.to_dict()
    assert report.to_dict()["counts"] == {"paragraphs": 2, "lines": 3}


def test_evaluate_with_scorer():
    report = evaluate_corpus([["唱首歌", "你好"], ["月光"]], specs(), scorer=MockScorer())
    assert 1 <= report.mean_r_bas <= 4 and 1 <= report.mean_r_adv <= 4


def test_evaluate_misaligned():
    with pytest.raises(ValueError):
        evaluate_corpus([["唱首歌"], ["月光"]], specs())
    with pytest.raises(ValueError):
        evaluate_corpus([["唱首歌", "你好"]], specs())


def test_report_table_shape():
    table = EvalReport(1.0, 0.5, 1, 4).to_table()
    assert table.splitlines()[0].split() == ["LA", "1.0000"]
