"""Deterministic text measurement: syllables, Chinese length, rhyme class."""
from .chinese import cjk_chars, count_chinese_length, is_cjk
from .rhyme import (
    RHYME_CLASSES,
    RHYME_NAMES,
    UNKNOWN,
    PinyinTable,
    RhymeClass,
    RhymeTable,
    pinyin_final,
    rhyme_class,
)
from .syllables import count_syllables, word_syllables

__all__ = [
    "RHYME_CLASSES",
    "RHYME_NAMES",
    "UNKNOWN",
    "PinyinTable",
    "RhymeClass",
    "RhymeTable",
    "cjk_chars",
    "count_chinese_length",
    "count_syllables",
    "is_cjk",
    "pinyin_final",
    "rhyme_class",
    "word_syllables",
]
