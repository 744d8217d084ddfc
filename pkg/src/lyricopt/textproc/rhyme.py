"""Rhyme classification of Chinese line endings (thirteen-rhyme scheme).

Two data files drive this module:

* a pinyin table, ``character<TAB>final`` with tone-stripped finals
  (``v`` stands for ``ü``), one primary reading per character;
* a rhyme table, ``final<TAB>class_name`` assigning every final to one of
  the thirteen classes.

The shipped tables live in ``lyricopt/data``; alternative groupings can be
loaded with :meth:`RhymeTable.from_file`.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

from .chinese import cjk_chars, is_cjk

# Conventional order of the thirteen rhyme classes; the position is the id.
RHYME_NAMES: tuple[str, ...] = (
    "发花",
    "梭波",
    "乜斜",
    "一七",
    "姑苏",
    "怀来",
    "灰堆",
    "遥条",
    "由求",
    "言前",
    "人辰",
    "江阳",
    "中东",
)

# Pinyin-table marker for a character that only ever acts as an erhua suffix.
ERHUA_SUFFIX = "r"


@dataclass(frozen=True, order=True)
class RhymeClass:
    id: int
    name: str

    @property
    def is_unknown(self) -> bool:
        return self.id == UNKNOWN.id

    @classmethod
    def by_name(cls, name: str) -> "RhymeClass":
        if name == UNKNOWN.name:
            return UNKNOWN
        try:
            return RHYME_CLASSES[RHYME_NAMES.index(name)]
        except ValueError:
            raise ValueError(f"unknown rhyme class name: {name!r}") from None

    @classmethod
    def by_id(cls, class_id: int) -> "RhymeClass":
        if class_id == UNKNOWN.id:
            return UNKNOWN
        if not 0 <= class_id < len(RHYME_CLASSES):
            raise ValueError(f"rhyme class id out of range: {class_id}")
        return RHYME_CLASSES[class_id]

    def __str__(self) -> str:
        return self.name


RHYME_CLASSES: tuple[RhymeClass, ...] = tuple(
    RhymeClass(i, name) for i, name in enumerate(RHYME_NAMES)
)
UNKNOWN = RhymeClass(len(RHYME_NAMES), "Unknown")


def _read_tsv(path: Path | str, what: str) -> dict[str, str]:
    entries: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0] or not parts[1]:
                raise ValueError(f"{path}:{lineno}: malformed {what} record {line!r}")
            key, value = parts
            if key in entries and entries[key] != value:
                raise ValueError(f"{path}:{lineno}: conflicting entry for {key!r}")
            entries[key] = value
    return entries


class PinyinTable:
    """Character -> primary tone-stripped final."""

    def __init__(self, entries: Mapping[str, str]):
        for ch in entries:
            if not is_cjk(ch):
                raise ValueError(f"pinyin table key is not a single CJK character: {ch!r}")
        self._entries = dict(entries)

    @classmethod
    def from_file(cls, path: Path | str) -> "PinyinTable":
        return cls(_read_tsv(path, "pinyin"))

    @classmethod
    def default(cls) -> "PinyinTable":
        return _default_pinyin()

    def get(self, ch: str) -> str | None:
        return self._entries.get(ch)

    def __contains__(self, ch: object) -> bool:
        return ch in self._entries

    def __len__(self) -> int:
        return len(self._entries)


class RhymeTable:
    """Final -> one of the thirteen :class:`RhymeClass` values."""

    def __init__(self, entries: Mapping[str, str]):
        mapping = {}
        for final, name in entries.items():
            rc = RhymeClass.by_name(name)
            if rc.is_unknown:
                raise ValueError(f"final {final!r} cannot map to Unknown")
            mapping[final] = rc
        self._entries: dict[str, RhymeClass] = mapping

    @classmethod
    def from_file(cls, path: Path | str) -> "RhymeTable":
        return cls(_read_tsv(path, "rhyme"))

    @classmethod
    def default(cls) -> "RhymeTable":
        return _default_rhyme()

    def classify_final(self, final: str | None) -> RhymeClass:
        if final is None:
            return UNKNOWN
        return self._entries.get(final, UNKNOWN)

    def finals(self) -> Iterable[str]:
        return self._entries.keys()

    def classes(self) -> set[RhymeClass]:
        return set(self._entries.values())


@lru_cache(maxsize=None)
def _default_pinyin() -> PinyinTable:
    ref = resources.files("lyricopt") / "data" / "pinyin_finals.tsv"
    with resources.as_file(ref) as path:
        return PinyinTable.from_file(path)


@lru_cache(maxsize=None)
def _default_rhyme() -> RhymeTable:
    ref = resources.files("lyricopt") / "data" / "rhyme13.tsv"
    with resources.as_file(ref) as path:
        return RhymeTable.from_file(path)


def pinyin_final(ch: str, table: PinyinTable | None = None) -> str | None:
    """Primary final of ``ch`` or ``None`` when the table has no entry."""
    table = table or PinyinTable.default()
    if len(ch) != 1:
        return None
    return table.get(ch)


def rhyme_class(
    line: str,
    table: PinyinTable | None = None,
    rhymes: RhymeTable | None = None,
) -> RhymeClass:
    """Rhyme class of the last CJK character of ``line``.

    Trailing punctuation and Latin text are skipped. An erhua suffix
    (儿) defers to the character before it. Lines without a classifiable
    CJK ending give :data:`UNKNOWN`.
    """
    table = table or PinyinTable.default()
    rhymes = rhymes or RhymeTable.default()
    chars = cjk_chars(line)
    while chars:
        final = table.get(chars[-1])
        if final == ERHUA_SUFFIX:
            if len(chars) == 1:
                return rhymes.classify_final("er")
            chars.pop()
            continue
        return rhymes.classify_final(final)
    return UNKNOWN
