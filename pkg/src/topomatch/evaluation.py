"""Metrics for both tasks: precision/recall/F1/accuracy for binary matching,
and P@1 / MAP@k with geographic relevance for candidate selection."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Sequence

from .errors import InputError
from .gazetteer import Gazetteer, haversine_km
from .results import RankedCandidates


@dataclass(frozen=True)
class BinaryMetrics:
    precision: float
    recall: float
    f1: float
    macro_f1: float
    accuracy: float
    # names of metrics whose denominator was zero and were defined as 0
    zero_division: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "macro_f1": self.macro_f1,
            "accuracy": self.accuracy,
            "zero_division": list(self.zero_division),
        }


def _prf(tp: int, fp: int, fn: int, flags: list[str], tag: str) -> tuple[float, float, float]:
    if tp + fp == 0:
        flags.append(f"{tag}_precision")
        precision = 0.0
    else:
        precision = tp / (tp + fp)
    if tp + fn == 0:
        flags.append(f"{tag}_recall")
        recall = 0.0
    else:
        recall = tp / (tp + fn)
    if precision + recall == 0.0:
        flags.append(f"{tag}_f1")
        f1 = 0.0
    else:
        f1 = 2.0 * precision * recall / (precision + recall)
    return precision, recall, f1


def binary_metrics(predictions: Sequence[bool], labels: Sequence[bool]) -> BinaryMetrics:
    """Positive-class precision/recall/F1, macro F1 over both classes, accuracy."""
    if len(predictions) != len(labels):
        raise InputError("predictions and labels differ in length")
    if not labels:
        raise InputError("cannot compute metrics on an empty set")
    tp = fp = fn = tn = 0
    for pred, lab in zip(predictions, labels):
        if pred and lab:
            tp += 1
        elif pred and not lab:
            fp += 1
        elif not pred and lab:
            fn += 1
        else:
            tn += 1
    flags: list[str] = []
    precision, recall, f1 = _prf(tp, fp, fn, flags, "positive")
    _, _, f1_neg = _prf(tn, fn, fp, flags, "negative")
    return BinaryMetrics(
        precision=precision,
        recall=recall,
        f1=f1,
        macro_f1=(f1 + f1_neg) / 2.0,
        accuracy=(tp + tn) / len(labels),
        zero_division=tuple(flags),
    )


class GoldQuery(NamedTuple):
    toponym: str
    gold_lat: float
    gold_lon: float


def read_gold_file(path: str | Path) -> list[GoldQuery]:
    """Gold TSV: toponym <TAB> gold_lat <TAB> gold_lon, no header."""
    path = Path(path)
    if not path.is_file():
        raise InputError(f"gold file not found: {path}")
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise InputError(f"line {lineno}: expected 3 tab-separated fields, got {len(parts)}")
            try:
                lat, lon = float(parts[1]), float(parts[2])
            except ValueError:
                raise InputError(f"line {lineno}: coordinates are not numbers") from None
            if not (-90.0 <= lat <= 90.0 and -180.0 <= lon <= 180.0):
                raise InputError(f"line {lineno}: coordinates out of range")
            out.append(GoldQuery(parts[0], lat, lon))
    return out


@dataclass(frozen=True)
class RelevanceJudgment:
    altname: str
    location_id: str | None
    distance_km: float
    relevant: bool
    found_in_gazetteer: bool = True


def judge(
    candidate_altname: str,
    gold: GoldQuery,
    gazetteer: Gazetteer,
    tolerance_km: float = 10.0,
) -> RelevanceJudgment:
    """Pick the entity bearing the altname that is closest to the gold
    coordinates; relevant iff within tolerance_km (inclusive).

    An altname absent from the gazetteer is judged not relevant and flagged
    rather than treated as an error.
    """
    ids = gazetteer.ids_for(candidate_altname)
    if not ids:
        return RelevanceJudgment(candidate_altname, None, math.inf, False, found_in_gazetteer=False)
    best_id = None
    best_d = math.inf
    for loc_id in ids:
        e = gazetteer.entries[loc_id]
        d = haversine_km(e.lat, e.lon, gold.gold_lat, gold.gold_lon)
        if d < best_d:
            best_id, best_d = loc_id, d
    return RelevanceJudgment(candidate_altname, best_id, best_d, best_d <= tolerance_km)


def average_precision_at_k(relevances: Sequence[bool], k: int) -> float:
    """AP@k = sum of precision-at-hit over the top k, normalized by
    min(#relevant in top k, k); zero when nothing relevant is retrieved."""
    rel = list(relevances[:k])
    r_k = sum(rel)
    if r_k == 0:
        return 0.0
    total = 0.0
    hits = 0
    for rank, is_rel in enumerate(rel, start=1):
        if is_rel:
            hits += 1
            total += hits / rank
    return total / min(r_k, k)


@dataclass(frozen=True)
class RankingReport:
    n_queries: int
    p_at_1: float
    map_at: dict[int, float]

    def to_dict(self) -> dict:
        return {
            "n_queries": self.n_queries,
            "p_at_1": self.p_at_1,
            **{f"map_at_{k}": v for k, v in sorted(self.map_at.items())},
        }


def _result_map(results: list[RankedCandidates]) -> dict[str, RankedCandidates]:
    return {r.query: r for r in results}


def _relevance_list(
    result: RankedCandidates,
    gold: GoldQuery,
    gazetteer: Gazetteer,
    tolerance_km: float,
    cache: dict,
) -> list[bool]:
    rels = []
    for item in result.items:
        key = (item.altname, gold.toponym)
        if key not in cache:
            cache[key] = judge(item.altname, gold, gazetteer, tolerance_km).relevant
        rels.append(cache[key])
    return rels


def ranking_metrics(
    ranked_results: list[RankedCandidates],
    gold_queries: list[GoldQuery],
    gazetteer: Gazetteer,
    ks: Sequence[int] = (5, 10, 20),
    tolerance_km: float = 10.0,
) -> RankingReport:
    """P@1 and MAP@k over the gold queries; every query must have results."""
    if not gold_queries:
        raise InputError("no gold queries to evaluate")
    by_query = _result_map(ranked_results)
    cache: dict = {}
    p1_hits = 0
    ap_sums = {k: 0.0 for k in ks}
    for gold in gold_queries:
        if gold.toponym not in by_query:
            raise InputError(f"no ranked results for query {gold.toponym!r}")
        rels = _relevance_list(by_query[gold.toponym], gold, gazetteer, tolerance_km, cache)
        if rels and rels[0]:
            p1_hits += 1
        for k in ks:
            ap_sums[k] += average_precision_at_k(rels, k)
    n = len(gold_queries)
    return RankingReport(
        n_queries=n,
        p_at_1=p1_hits / n,
        map_at={k: ap_sums[k] / n for k in ks},
    )


@dataclass
class ComparisonReport:
    """Per-method table: P@1, MAP@k, and optional wall time."""

    rows: list[dict] = field(default_factory=list)
    excluded_queries: list[str] = field(default_factory=list)
    ks: tuple[int, ...] = (5, 10, 20)

    def to_tsv(self, path: str | Path) -> None:
        cols = ["method", "n_queries", "p_at_1"] + [f"map_at_{k}" for k in self.ks] + ["time_s"]
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\t".join(cols) + "\n")
            for row in self.rows:
                fh.write("\t".join(_cell(row.get(c)) for c in cols) + "\n")

    def to_json(self, path: str | Path) -> None:
        payload = {
            "excluded_queries": self.excluded_queries,
            "rows": self.rows,
        }
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(payload, fh, ensure_ascii=False, sort_keys=True, indent=1)
            fh.write("\n")


def _cell(value) -> str:
    if value is None:
        return "-"
    if isinstance(value, float):
        return f"{value:.4f}"
    return str(value)


def compare_methods(
    per_method_results: dict[str, list[RankedCandidates]],
    gold_queries: list[GoldQuery],
    gazetteer: Gazetteer,
    ks: Sequence[int] = (5, 10, 20),
    tolerance_km: float = 10.0,
    times: dict[str, float] | None = None,
) -> ComparisonReport:
    """Cross-method comparison with the shared exclusion rule: queries for
    which no method retrieved any relevant candidate are removed from every
    method's metrics."""
    if not per_method_results:
        raise InputError("at least one method is required")
    gold_names = {g.toponym for g in gold_queries}
    for method, results in per_method_results.items():
        have = {r.query for r in results}
        if have != gold_names:
            missing = sorted(gold_names - have)[:3]
            extra = sorted(have - gold_names)[:3]
            raise InputError(
                f"method {method!r} has an inconsistent query set "
                f"(missing {missing}, unexpected {extra})"
            )
    cache: dict = {}
    excluded = []
    kept_gold = []
    for gold in gold_queries:
        any_hit = False
        for results in per_method_results.values():
            rels = _relevance_list(
                _result_map(results)[gold.toponym], gold, gazetteer, tolerance_km, cache
            )
            if any(rels):
                any_hit = True
                break
        if any_hit:
            kept_gold.append(gold)
        else:
            excluded.append(gold.toponym)

    report = ComparisonReport(ks=tuple(ks), excluded_queries=excluded)
    for method, results in per_method_results.items():
        if kept_gold:
            metrics = ranking_metrics(results, kept_gold, gazetteer, ks, tolerance_km)
            row = {"method": method, **metrics.to_dict()}
        else:
            row = {"method": method, "n_queries": 0, "p_at_1": None}
            row.update({f"map_at_{k}": None for k in ks})
        row["time_s"] = None if not times or method not in times else times[method]
        report.rows.append(row)
    return report
