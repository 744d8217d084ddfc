"""Regenerate ``src/lyricopt/data/pinyin_finals.tsv`` from pypinyin.

pypinyin is only needed to run this script; the package reads the
generated TSV at runtime.

    python scripts/build_pinyin_table.py
"""
from __future__ import annotations

import argparse
from pathlib import Path

from pypinyin import Style, lazy_pinyin

# 儿 is usually an erhua suffix in lyrics; the marker tells the classifier to
# look at the preceding character instead.
ERHUA_SUFFIX = {"儿": "r"}

DEFAULT_OUT = Path(__file__).resolve().parents[1] / "src" / "lyricopt" / "data" / "pinyin_finals.tsv"


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", type=Path, default=DEFAULT_OUT)
    args = parser.parse_args()

    lines = []
    for cp in range(0x4E00, 0xA000):
        ch = chr(cp)
        if ch in ERHUA_SUFFIX:
            lines.append(f"{ch}\t{ERHUA_SUFFIX[ch]}")
            continue
        finals = lazy_pinyin(ch, style=Style.FINALS, strict=True, errors="ignore")
        # syllabic nasals (嗯, 呣) have no final
        if finals and finals[0]:
            lines.append(f"{ch}\t{finals[0]}")
    args.out.write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {len(lines)} entries to {args.out}")


if __name__ == "__main__":
    main()
