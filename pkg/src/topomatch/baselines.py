"""Classical comparators: optimal-string-alignment Damerau-Levenshtein
distance, normalized similarity, threshold tuning for binary matching, and
exact / edit-distance candidate retrieval.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .gazetteer import Gazetteer
from .pairs import LabeledPair
from .results import Candidate, RankedCandidates

_BIG = np.int16(16000)


def dl_distance(a: str, b: str) -> int:
    """Edit distance with insert/delete/substitute and adjacent transposition
    (the restricted, optimal-string-alignment variant)."""
    la, lb = len(a), len(b)
    if la == 0:
        return lb
    if lb == 0:
        return la
    prev2: list[int] | None = None
    prev = list(range(lb + 1))
    for i in range(1, la + 1):
        cur = [i] + [0] * lb
        ca = a[i - 1]
        for j in range(1, lb + 1):
            cost = 0 if ca == b[j - 1] else 1
            best = prev[j] + 1
            ins = cur[j - 1] + 1
            if ins < best:
                best = ins
            sub = prev[j - 1] + cost
            if sub < best:
                best = sub
            if i > 1 and j > 1 and ca == b[j - 2] and a[i - 2] == b[j - 1]:
                tr = prev2[j - 2] + 1
                if tr < best:
                    best = tr
            cur[j] = best
        prev2, prev = prev, cur
    return prev[lb]


def dl_similarity(a: str, b: str) -> float:
    """1 - distance / max(len); two empty strings count as identical."""
    denom = max(len(a), len(b))
    if denom == 0:
        return 1.0
    return 1.0 - dl_distance(a, b) / denom


class _OsaBucket:
    """Candidates padded to one common width, DP'd together."""

    def __init__(self, strings: list[str], positions: np.ndarray):
        self.positions = positions
        self.lengths = np.array([len(s) for s in strings], dtype=np.int64)
        width = int(self.lengths.max()) if strings else 0
        self.codes = np.full((len(strings), width), -1, dtype=np.int32)
        for i, s in enumerate(strings):
            self.codes[i, : len(s)] = [ord(ch) for ch in s]
        self._j = np.arange(width + 1, dtype=np.int16)

    def distances(self, qc: list[int]) -> np.ndarray:
        n, width = self.codes.shape
        m = len(qc)
        d_prev = np.tile(self._j, (n, 1))
        if m == 0:
            return self.lengths.astype(np.int32)
        d_prev2 = None
        e = np.empty((n, width + 1), dtype=np.int16)
        for i in range(1, m + 1):
            cost = (self.codes != qc[i - 1]).astype(np.int16)
            base = np.minimum(d_prev[:, 1:] + np.int16(1), d_prev[:, :-1] + cost)
            if i >= 2 and width >= 2:
                # adjacent transposition: dp[i-2][j-2] + 1 wherever
                # a[i-1] == b[j-2] and a[i-2] == b[j-1]
                swap = (self.codes[:, :-1] == qc[i - 1]) & (self.codes[:, 1:] == qc[i - 2])
                trans = np.where(swap, d_prev2[:, : width - 1] + np.int16(1), _BIG)
                base[:, 1:] = np.minimum(base[:, 1:], trans)
            e[:, 0] = np.int16(i)
            e[:, 1:] = base
            # dp[i][j] = min over j' <= j of e[j'] + (j - j'): running minimum
            t = e - self._j
            np.minimum.accumulate(t, axis=1, out=t)
            d_cur = t + self._j
            d_prev2, d_prev = d_prev, d_cur
        return d_prev[np.arange(n), self.lengths].astype(np.int32)


class BatchDistanceScorer:
    """Distance of one query against many candidate strings at once.

    The dynamic program is vectorized across candidates, with the in-row
    insertion chain resolved by a running-minimum scan; candidates are
    bucketed by length so short names do not pay for the longest one.
    Results are integer-identical to dl_distance.
    """

    _BUCKET_STEP = 8

    def __init__(self, strings: list[str]):
        self.strings = strings
        self.lengths = np.array([len(s) for s in strings], dtype=np.int64)
        buckets: dict[int, list[int]] = {}
        for i, s in enumerate(strings):
            cap = max(1, -(-len(s) // self._BUCKET_STEP)) * self._BUCKET_STEP
            buckets.setdefault(cap, []).append(i)
        self._buckets = [
            _OsaBucket([strings[i] for i in idx], np.array(idx, dtype=np.int64))
            for cap, idx in sorted(buckets.items())
        ]

    def distances(self, query: str) -> np.ndarray:
        out = np.zeros(len(self.strings), dtype=np.int32)
        if not self._buckets:
            return out
        qc = [ord(ch) for ch in query]
        for bucket in self._buckets:
            out[bucket.positions] = bucket.distances(qc)
        return out

    def similarities(self, query: str) -> np.ndarray:
        d = self.distances(query).astype(np.float64)
        denom = np.maximum(self.lengths, len(query)).astype(np.float64)
        out = np.ones_like(d)
        nz = denom > 0
        out[nz] = 1.0 - d[nz] / denom[nz]
        return out


@dataclass(frozen=True)
class ThresholdModel:
    """Similarity cutoff for binary matching plus the F1 it achieved."""

    threshold: float
    train_f1: float

    def predict(self, similarity: float) -> bool:
        return similarity >= self.threshold


def tune_threshold(pairs: list[LabeledPair]) -> ThresholdModel:
    """Exhaustively evaluate F1 at every observed similarity (plus 0 and 1)
    and return the maximizer; ties resolve to the smallest threshold."""
    if not pairs:
        raise InputError("cannot tune a threshold on an empty pair set")
    sims = np.array([dl_similarity(p.s1, p.s2) for p in pairs])
    labels = np.array([p.label for p in pairs], dtype=bool)
    n_pos = int(labels.sum())
    if n_pos == 0 or n_pos == len(pairs):
        raise InputError("threshold tuning needs at least one positive and one negative pair")

    order = np.argsort(sims, kind="stable")
    sims_sorted = sims[order]
    labels_sorted = labels[order]
    # positives with similarity >= t, computed from the ascending suffix
    suffix_pos = np.cumsum(labels_sorted[::-1])[::-1]
    candidates = np.unique(np.concatenate([sims, [0.0, 1.0]]))
    best_t, best_f1 = 0.0, -1.0
    for t in candidates:
        lo = int(np.searchsorted(sims_sorted, t, side="left"))
        predicted = len(pairs) - lo
        tp = int(suffix_pos[lo]) if lo < len(pairs) else 0
        fp = predicted - tp
        fn = n_pos - tp
        denom = 2 * tp + fp + fn
        f1 = (2 * tp / denom) if denom else 0.0
        if f1 > best_f1:
            best_t, best_f1 = float(t), float(f1)
    return ThresholdModel(threshold=best_t, train_f1=best_f1)


def exact_candidates(query: str, gazetteer: Gazetteer) -> frozenset[str]:
    """Altnames that match the query exactly, case-insensitively, after the
    shared normalization. Unordered: exact retrieval carries no ranking."""
    return frozenset(gazetteer.altnames_caseless(query))


class LevDamRanker:
    """Rank a fixed altname universe by normalized similarity to queries."""

    def __init__(self, altnames: list[str], id_map: dict[str, tuple[str, ...]] | None = None):
        self.altnames = sorted(altnames)
        self.id_map = id_map or {}
        self._scorer = BatchDistanceScorer(self.altnames)

    def rank(self, query: str, k: int) -> RankedCandidates:
        if k < 1:
            raise InputError("k must be >= 1")
        sims = self._scorer.similarities(query)
        n = len(self.altnames)
        kk = min(k, n)
        # altnames are pre-sorted, so a stable sort on -similarity breaks
        # ties lexicographically
        top = np.argsort(-sims, kind="stable")[:kk]
        items = [
            Candidate(
                altname=self.altnames[i],
                distance=float(1.0 - sims[i]),
                location_ids=self.id_map.get(self.altnames[i], ()),
            )
            for i in top
        ]
        return RankedCandidates(query=query, items=items, k=k)


def levdam_rank(
    query: str,
    altnames: list[str],
    k: int,
    id_map: dict[str, tuple[str, ...]] | None = None,
) -> RankedCandidates:
    """One-shot ranking; build a LevDamRanker for repeated queries."""
    return LevDamRanker(altnames, id_map).rank(query, k)
