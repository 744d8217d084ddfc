"""Automatic evaluation: length accuracy, rhyme score, BLEU and reports."""
from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

from .pipeline import ParagraphSpec
from .rewards import Scorer, score_advanced, score_basic
from .textproc import PinyinTable, RhymeClass, RhymeTable, count_chinese_length, rhyme_class


def length_accuracy(lengths: Sequence[int], targets: Sequence[int]) -> float:
    """Fraction of lines whose length equals its target."""
    if len(lengths) != len(targets):
        raise ValueError(f"{len(lengths)} outputs but {len(targets)} targets")
    if not lengths:
        raise ValueError("length accuracy of an empty corpus is undefined")
    return sum(1 for n, t in zip(lengths, targets) if n == t) / len(lengths)


def paragraph_rhyme_score(rhymes: Sequence[RhymeClass], anchor: str = "plurality") -> float:
    if not rhymes:
        raise ValueError("paragraph has no sentences")
    if anchor == "plurality":
        counts = Counter(r for r in rhymes if not r.is_unknown)
        best = max(counts.values(), default=0)
    elif anchor == "last":
        last = rhymes[-1]
        best = 0 if last.is_unknown else sum(1 for r in rhymes if r == last)
    else:
        raise ValueError(f"unknown rhyme score anchor: {anchor!r}")
    return best / len(rhymes)


def rhyme_score(paragraphs: Sequence[Sequence[RhymeClass]], anchor: str = "plurality") -> float:
    """Mean over paragraphs of the share of lines in the largest rhyme group.

    ``anchor="last"`` counts lines sharing the last line's class instead.
    Unknown endings never form a group.
    """
    if not paragraphs:
        raise ValueError("rhyme score needs at least one paragraph")
    return sum(paragraph_rhyme_score(p, anchor) for p in paragraphs) / len(paragraphs)


# --- BLEU -------------------------------------------------------------------

_CJK_OR_PUNCT = re.compile(
    "([\u3000-\u303f\u3400-\u4dbf\u4e00-\u9fff\uf900-\ufaff\uff00-\uffef])"
)


def tokenize_zh(text: str) -> list[str]:
    """Every CJK character and full-width symbol is a token; other text splits on spaces."""
    return _CJK_OR_PUNCT.sub(r" \1 ", text).split()


def _ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu(hypotheses: Sequence[str], references: Sequence[str], max_order: int = 4) -> float:
    """Corpus BLEU on a 0-100 scale with character tokens for Chinese.

    Clipped n-gram counts are pooled over the corpus. For orders above
    one, one is added to both matches and totals so that short lines
    without 3- or 4-grams do not zero the score.
    """
    if len(hypotheses) != len(references):
        raise ValueError(f"{len(hypotheses)} hypotheses but {len(references)} references")
    if not hypotheses:
        raise ValueError("BLEU of an empty corpus is undefined")

    matches = [0] * max_order
    totals = [0] * max_order
    hyp_len = ref_len = 0
    for hyp, ref in zip(hypotheses, references):
        h, r = tokenize_zh(hyp), tokenize_zh(ref)
        hyp_len += len(h)
        ref_len += len(r)
        for n in range(1, max_order + 1):
            h_counts, r_counts = _ngrams(h, n), _ngrams(r, n)
            matches[n - 1] += sum(min(c, r_counts[g]) for g, c in h_counts.items())
            totals[n - 1] += sum(h_counts.values())

    if hyp_len == 0 or matches[0] == 0:
        return 0.0
    log_precision = 0.0
    for n in range(max_order):
        m, t = matches[n], totals[n]
        if n > 0:
            m, t = m + 1, t + 1
        log_precision += math.log(m / t) / max_order
    brevity = 1.0 if hyp_len > ref_len else math.exp(1 - ref_len / hyp_len)
    return 100.0 * brevity * math.exp(log_precision)


# --- reports ----------------------------------------------------------------


@dataclass(frozen=True)
class EvalReport:
    length_accuracy: float
    rhyme_score: float
    paragraphs: int
    lines: int
    bleu: float | None = None
    mean_r_bas: float | None = None
    mean_r_adv: float | None = None

    def to_dict(self) -> dict:
        out = {
            "length_accuracy": self.length_accuracy,
            "rhyme_score": self.rhyme_score,
            "counts": {"paragraphs": self.paragraphs, "lines": self.lines},
        }
        for name in ("bleu", "mean_r_bas", "mean_r_adv"):
            value = getattr(self, name)
            if value is not None:
                out[name] = value
        return out

    def to_table(self) -> str:
        rows = [
            ("LA", f"{self.length_accuracy:.4f}"),
            ("RS", f"{self.rhyme_score:.4f}"),
        ]
        if self.mean_r_bas is not None:
            rows.append(("R_bas", f"{self.mean_r_bas:.3f}"))
        if self.mean_r_adv is not None:
            rows.append(("R_adv", f"{self.mean_r_adv:.3f}"))
        if self.bleu is not None:
            rows.append(("BLEU", f"{self.bleu:.2f}"))
        rows.append(("paragraphs", str(self.paragraphs)))
        rows.append(("lines", str(self.lines)))
        width = max(len(name) for name, _ in rows)
        return "\n".join(f"{name:<{width}}  {value:>10}" for name, value in rows)


def evaluate_corpus(
    outputs: Sequence[Sequence[str]],
    specs: Sequence[ParagraphSpec],
    references: Sequence[Sequence[str]] | None = None,
    scorer: Scorer | None = None,
    *,
    table: PinyinTable | None = None,
    rhymes: RhymeTable | None = None,
    anchor: str = "plurality",
) -> EvalReport:
    """Score translated paragraphs against their specs.

    Lengths and rhyme classes are recomputed from the output text. BLEU
    is reported only with references, quality means only with a scorer.
    """
    if len(outputs) != len(specs):
        raise ValueError(f"{len(outputs)} output paragraphs but {len(specs)} specs")
    if not outputs:
        raise ValueError("nothing to evaluate")
    if references is None and all(p.references is not None for p in specs):
        references = [p.references for p in specs]  # type: ignore[misc]
    if references is not None and len(references) != len(outputs):
        raise ValueError("references do not align with outputs")

    lengths, targets, paragraph_rhymes = [], [], []
    hyps, refs = [], []
    bas, adv = [], []
    for k, (lines, p) in enumerate(zip(outputs, specs)):
        if len(lines) != len(p.sentences):
            raise ValueError(
                f"paragraph {k}: {len(lines)} output lines for {len(p.sentences)} sentences"
            )
        lengths.extend(count_chinese_length(line) for line in lines)
        targets.extend(p.targets)
        paragraph_rhymes.append([rhyme_class(line, table, rhymes) for line in lines])
        if references is not None:
            if len(references[k]) != len(lines):
                raise ValueError(f"paragraph {k}: references do not align with outputs")
            hyps.extend(lines)
            refs.extend(references[k])
        if scorer is not None:
            for line, spec in zip(lines, p.sentences):
                bas.append(score_basic(spec.source, line, p.context, scorer, spec.target_length))
                adv.append(score_advanced(line, scorer))

    return EvalReport(
        length_accuracy=length_accuracy(lengths, targets),
        rhyme_score=rhyme_score(paragraph_rhymes, anchor),
        paragraphs=len(outputs),
        lines=len(lengths),
        bleu=bleu(hyps, refs) if references is not None else None,
        mean_r_bas=sum(bas) / len(bas) if bas else None,
        mean_r_adv=sum(adv) / len(adv) if adv else None,
    )
