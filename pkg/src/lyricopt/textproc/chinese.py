from __future__ import annotations

import re

# CJK Unified Ideographs, Extension A, compatibility block, Extensions B-G.
CJK_PATTERN = re.compile(
    "[\u3400-\u4dbf\u4e00-\u9fff\uf900-\ufaff\U00020000-\U0003134f]"
)


def is_cjk(ch: str) -> bool:
    return len(ch) == 1 and CJK_PATTERN.match(ch) is not None


def cjk_chars(text: str) -> list[str]:
    return CJK_PATTERN.findall(text)


def count_chinese_length(line: str) -> int:
    """Number of CJK ideographs in ``line``.

    Punctuation (full- and half-width), whitespace, digits and Latin
    letters do not count, so "宝贝呀，该去思考了" has length 8.
    """
    return len(CJK_PATTERN.findall(line))
