"""Labeled string pairs and their TSV file format.

One pair per line: string1 <TAB> string2 <TAB> TRUE|FALSE, UTF-8, no header.
"""

from __future__ import annotations

from pathlib import Path
from typing import NamedTuple

from .errors import InputError


class LabeledPair(NamedTuple):
    s1: str
    s2: str
    label: bool


def read_pairs_file(path: str | Path) -> list[LabeledPair]:
    path = Path(path)
    if not path.is_file():
        raise InputError(f"pair file not found: {path}")
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise InputError(f"line {lineno}: expected 3 tab-separated fields, got {len(parts)}")
            s1, s2, flag = parts
            if flag not in ("TRUE", "FALSE"):
                raise InputError(f"line {lineno}: label must be TRUE or FALSE, got {flag!r}")
            pairs.append(LabeledPair(s1, s2, flag == "TRUE"))
    return pairs


def write_pairs_file(path: str | Path, pairs: list[LabeledPair]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for p in pairs:
            fh.write(f"{p.s1}\t{p.s2}\t{'TRUE' if p.label else 'FALSE'}\n")
