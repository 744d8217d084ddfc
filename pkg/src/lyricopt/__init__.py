"""Singable English-to-Chinese lyric translation by paragraph-level optimization."""

__version__ = "0.1.0"

from .lossopt import (
    DEFAULT_WEIGHTS,
    Candidate,
    LossWeights,
    ParagraphSolution,
    SentenceSpec,
    brute_force_optimize,
    optimize,
    paragraph_loss,
    sentence_loss,
)
from .pipeline import ParagraphSpec, PipelineConfig, translate_paragraph, translate_song
from .textproc import count_chinese_length, count_syllables, rhyme_class

__all__ = [
    "DEFAULT_WEIGHTS",
    "Candidate",
    "LossWeights",
    "ParagraphSolution",
    "ParagraphSpec",
    "PipelineConfig",
    "SentenceSpec",
    "brute_force_optimize",
    "count_chinese_length",
    "count_syllables",
    "optimize",
    "paragraph_loss",
    "rhyme_class",
    "sentence_loss",
    "translate_paragraph",
    "translate_song",
]
