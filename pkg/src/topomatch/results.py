"""Ranked candidate lists and their JSON-lines interchange format.

Both the neural ranker and the classical baselines emit this shape so the
evaluator is method-agnostic.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

from .errors import InputError


class Candidate(NamedTuple):
    altname: str
    distance: float
    location_ids: tuple[str, ...]


@dataclass
class RankedCandidates:
    """Candidates for one query, ascending by distance, ties by altname."""

    query: str
    items: list[Candidate]
    k: int

    def __post_init__(self) -> None:
        for a, b in zip(self.items, self.items[1:]):
            if b.distance < a.distance:
                raise ValueError("candidate distances must be non-decreasing")


def write_ranked_jsonl(path: str | Path, results: list[RankedCandidates]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for r in results:
            obj = {
                "query": r.query,
                "candidates": [
                    {
                        "altname": c.altname,
                        "distance": c.distance,
                        "location_ids": list(c.location_ids),
                    }
                    for c in r.items
                ],
            }
            fh.write(json.dumps(obj, ensure_ascii=False, sort_keys=True) + "\n")


def read_ranked_jsonl(path: str | Path) -> list[RankedCandidates]:
    path = Path(path)
    if not path.is_file():
        raise InputError(f"results file not found: {path}")
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                items = [
                    Candidate(c["altname"], float(c["distance"]), tuple(c["location_ids"]))
                    for c in obj["candidates"]
                ]
                out.append(RankedCandidates(query=obj["query"], items=items, k=len(items)))
            except (KeyError, ValueError, TypeError) as exc:
                raise InputError(f"{path} line {lineno}: malformed ranked result: {exc}") from exc
    return out
