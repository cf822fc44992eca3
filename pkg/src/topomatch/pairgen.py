"""Balanced toponym-pair dataset generation.

Two generators share a post-processing step:

* gazetteer mode: half trivial pairs (identical / case-variant positives,
  maximally dissimilar sampled negatives) and half challenging pairs
  (similar same-entity positives, similar other-entity negatives with a
  geographic exclusion radius);
* OCR mode: observed (corrected, variant) positives and synthetic
  negatives built from character transformations never seen in the data.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple

import numpy as np

from .baselines import BatchDistanceScorer, dl_similarity
from .errors import InputError
from .gazetteer import Gazetteer, haversine_km
from .pairs import LabeledPair


class EditOperation(NamedTuple):
    """One primitive string edit; `from_char` is empty for inserts and
    `to_char` is empty for deletes."""

    kind: str  # substitute | insert | delete
    from_char: str
    to_char: str

    def validate(self) -> None:
        if self.kind == "substitute":
            if not self.from_char or not self.to_char or self.from_char == self.to_char:
                raise ValueError(f"bad substitute operation {self}")
        elif self.kind == "insert":
            if self.from_char or not self.to_char:
                raise ValueError(f"bad insert operation {self}")
        elif self.kind == "delete":
            if not self.from_char or self.to_char:
                raise ValueError(f"bad delete operation {self}")
        else:
            raise ValueError(f"unknown edit kind {self.kind!r}")


def edit_script(a: str, b: str) -> tuple[EditOperation, ...]:
    """Minimal insert/delete/substitute script turning a into b, with a
    deterministic backtrace (substitution preferred, then delete, then
    insert)."""
    la, lb = len(a), len(b)
    dp = np.zeros((la + 1, lb + 1), dtype=np.int32)
    dp[:, 0] = np.arange(la + 1)
    dp[0, :] = np.arange(lb + 1)
    for i in range(1, la + 1):
        ca = a[i - 1]
        row = dp[i]
        prev = dp[i - 1]
        for j in range(1, lb + 1):
            cost = 0 if ca == b[j - 1] else 1
            row[j] = min(prev[j] + 1, row[j - 1] + 1, prev[j - 1] + cost)
    ops = []
    i, j = la, lb
    while i > 0 or j > 0:
        if i > 0 and j > 0 and a[i - 1] == b[j - 1] and dp[i, j] == dp[i - 1, j - 1]:
            i -= 1
            j -= 1
        elif i > 0 and j > 0 and dp[i, j] == dp[i - 1, j - 1] + 1:
            ops.append(EditOperation("substitute", a[i - 1], b[j - 1]))
            i -= 1
            j -= 1
        elif i > 0 and dp[i, j] == dp[i - 1, j] + 1:
            ops.append(EditOperation("delete", a[i - 1], ""))
            i -= 1
        else:
            ops.append(EditOperation("insert", "", b[j - 1]))
            j -= 1
    ops.reverse()
    return tuple(ops)


@dataclass
class GenerationReport:
    mode: str
    counts: dict[str, int] = field(default_factory=dict)
    drops: dict[str, int] = field(default_factory=dict)

    @property
    def positives(self) -> int:
        return sum(v for k, v in self.counts.items() if k.endswith("positives"))

    @property
    def negatives(self) -> int:
        return sum(v for k, v in self.counts.items() if k.endswith("negatives"))

    def to_json(self, path: str | Path) -> None:
        payload = {
            "mode": self.mode,
            "counts": self.counts,
            "drops": self.drops,
            "positives": self.positives,
            "negatives": self.negatives,
        }
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(payload, fh, ensure_ascii=False, sort_keys=True, indent=1)
            fh.write("\n")


# ---------------------------------------------------------------------------
# gazetteer mode
# ---------------------------------------------------------------------------

TRIVIAL_POSITIVE = "trivial_positive"
TRIVIAL_NEGATIVE = "trivial_negative"
CHALLENGING_POSITIVE = "challenging_positive"
CHALLENGING_NEGATIVE = "challenging_negative"


def _min_entity_distance_km(
    gazetteer: Gazetteer, ids_a: Iterable[str], ids_b: Iterable[str]
) -> float:
    best = float("inf")
    for ia in ids_a:
        ea = gazetteer.entries[ia]
        for ib in ids_b:
            eb = gazetteer.entries[ib]
            d = haversine_km(ea.lat, ea.lon, eb.lat, eb.lon)
            if d < best:
                best = d
    return best


def generate_gazetteer_pairs_categorized(
    gazetteer: Gazetteer,
    seed: int,
    sim_threshold: float = 0.25,
    km_threshold: float = 50.0,
    sample_size: int = 50,
    max_negative_candidates: int = 10,
) -> list[tuple[LabeledPair, str]]:
    """gen_gazetteer_pairs with a category tag per pair (used by tests and
    the report)."""
    if len(gazetteer) < 2:
        raise InputError("gazetteer pair generation needs at least two entities")
    rng = np.random.default_rng(seed)

    alt_to_ids: dict[str, set[str]] = {}
    for entry in gazetteer.entries.values():
        for name in entry.altnames:
            alt_to_ids.setdefault(name, set()).add(entry.location_id)
    all_alts = sorted(alt_to_ids)
    scorer = BatchDistanceScorer(all_alts)

    # positives per entity, attributed to their lexicographically first name
    trivial_pos: dict[str, list[LabeledPair]] = {}
    chall_pos: dict[str, list[LabeledPair]] = {}
    for loc_id in sorted(gazetteer.entries):
        names = sorted(gazetteer.entries[loc_id].altnames)
        for a in names:
            trivial_pos.setdefault(a, []).append(LabeledPair(a, a, True))
        for x, a in enumerate(names):
            for b in names[x + 1 :]:
                pair = LabeledPair(a, b, True)
                if a.lower() == b.lower():
                    trivial_pos.setdefault(a, []).append(pair)
                elif dl_similarity(a, b) > sim_threshold:
                    chall_pos.setdefault(a, []).append(pair)

    out: list[tuple[LabeledPair, str]] = []

    for source in sorted(set(trivial_pos) | set(chall_pos)):
        source_ids = alt_to_ids[source]

        # trivial half: most dissimilar names among a random sample
        want = len(trivial_pos.get(source, []))
        trivial_neg: list[LabeledPair] = []
        if want:
            take = min(sample_size, len(all_alts))
            sampled = rng.choice(len(all_alts), size=take, replace=False)
            scored = sorted(
                ((dl_similarity(source, all_alts[i]), all_alts[i]) for i in sampled),
                key=lambda t: (t[0], t[1]),
            )
            for sim, cand in scored:
                if len(trivial_neg) == want:
                    break
                if cand == source or source_ids & alt_to_ids[cand]:
                    continue
                trivial_neg.append(LabeledPair(source, cand, False))
        kept = min(want, len(trivial_neg))
        for pair in trivial_pos.get(source, [])[:kept]:
            out.append((pair, TRIVIAL_POSITIVE))
        for pair in trivial_neg[:kept]:
            out.append((pair, TRIVIAL_NEGATIVE))

        # challenging half: nearest other-entity names, geographic exclusion
        want = len(chall_pos.get(source, []))
        chall_neg: list[LabeledPair] = []
        if want:
            sims = scorer.similarities(source)
            order = np.argsort(-sims, kind="stable")
            candidates = []
            for i in order:
                cand = all_alts[i]
                if cand == source or source_ids & alt_to_ids[cand]:
                    continue
                candidates.append(cand)
                if len(candidates) == max_negative_candidates:
                    break
            for cand in candidates:
                if len(chall_neg) == want:
                    break
                if _min_entity_distance_km(gazetteer, source_ids, alt_to_ids[cand]) <= km_threshold:
                    continue
                chall_neg.append(LabeledPair(source, cand, False))
        kept = min(want, len(chall_neg))
        for pair in chall_pos.get(source, [])[:kept]:
            out.append((pair, CHALLENGING_POSITIVE))
        for pair in chall_neg[:kept]:
            out.append((pair, CHALLENGING_NEGATIVE))

    return out


def gen_gazetteer_pairs(
    gazetteer: Gazetteer,
    seed: int,
    sim_threshold: float = 0.25,
    km_threshold: float = 50.0,
    sample_size: int = 50,
    max_negative_candidates: int = 10,
) -> tuple[list[LabeledPair], GenerationReport]:
    """Balanced pair dataset from a gazetteer; deterministic given the seed."""
    tagged = generate_gazetteer_pairs_categorized(
        gazetteer, seed, sim_threshold, km_threshold, sample_size, max_negative_candidates
    )
    counts = Counter(tag for _, tag in tagged)
    report = GenerationReport(
        mode="gazetteer",
        counts={
            "trivial_positives": counts[TRIVIAL_POSITIVE],
            "trivial_negatives": counts[TRIVIAL_NEGATIVE],
            "challenging_positives": counts[CHALLENGING_POSITIVE],
            "challenging_negatives": counts[CHALLENGING_NEGATIVE],
        },
    )
    return [pair for pair, _ in tagged], report


# ---------------------------------------------------------------------------
# OCR mode
# ---------------------------------------------------------------------------

OCR_FILTER_RULES = (
    "identical",
    "short_ocr",
    "substring",
    "hyphen",
    "non_alphabetic",
    "singleton_operation",
)


def filter_ocr_pairs(
    aligned_tokens: list[tuple[str, str]],
) -> tuple[list[tuple[str, str]], dict[str, int]]:
    """Apply the six drop rules to aligned (ocr, correction) token pairs.

    Rules 1-5 are per-pair; rule 6 drops pairs whose minimal edit script
    (ocr -> correction) contains an operation occurring only once across
    the whole surviving dataset. A pair counts toward the first rule that
    drops it.
    """
    drops = {rule: 0 for rule in OCR_FILTER_RULES}
    stage: list[tuple[str, str]] = []
    for ocr, corr in aligned_tokens:
        if ocr == corr:
            drops["identical"] += 1
        elif len(ocr) < 2:
            drops["short_ocr"] += 1
        elif ocr in corr or corr in ocr:
            drops["substring"] += 1
        elif "-" in corr:
            drops["hyphen"] += 1
        elif not corr.isalpha():
            drops["non_alphabetic"] += 1
        else:
            stage.append((ocr, corr))

    scripts = [edit_script(ocr, corr) for ocr, corr in stage]
    freq: Counter[EditOperation] = Counter()
    for script in scripts:
        freq.update(script)
    kept = []
    for pair, script in zip(stage, scripts):
        if any(freq[op] < 2 for op in script):
            drops["singleton_operation"] += 1
        else:
            kept.append(pair)
    return kept, drops


def _apply_operation(s: str, op: EditOperation, pos: int) -> str:
    if op.kind == "substitute":
        return s[:pos] + op.to_char + s[pos + 1 :]
    if op.kind == "insert":
        return s[:pos] + op.to_char + s[pos:]
    return s[:pos] + s[pos + 1 :]


def _synthesize_negative(
    corrected: str,
    rng: np.random.Generator,
    observed_ops: set[EditOperation],
    alphabet: list[str],
    forbidden: set[str],
    max_tries: int = 200,
) -> str:
    """A corrupted variant whose minimal edit script contains at least one
    transformation never observed in the real data."""
    kinds = ("substitute", "insert", "delete")
    for _ in range(max_tries):
        s = corrected
        n_ops = int(rng.integers(1, 3))
        for _ in range(n_ops):
            if not s:
                break
            kind = kinds[int(rng.integers(0, len(kinds)))]
            if kind == "insert":
                pos = int(rng.integers(0, len(s) + 1))
                ch = alphabet[int(rng.integers(0, len(alphabet)))]
                s = _apply_operation(s, EditOperation("insert", "", ch), pos)
            elif kind == "delete":
                pos = int(rng.integers(0, len(s)))
                s = _apply_operation(s, EditOperation("delete", s[pos], ""), pos)
            else:
                pos = int(rng.integers(0, len(s)))
                ch = alphabet[int(rng.integers(0, len(alphabet)))]
                if ch == s[pos]:
                    continue
                s = _apply_operation(s, EditOperation("substitute", s[pos], ch), pos)
        if not s or s == corrected or s in forbidden:
            continue
        script = edit_script(corrected, s)
        if any(op not in observed_ops for op in script):
            return s
    raise InputError(
        "alphabet too small to produce unobserved transformations "
        f"for token {corrected!r}"
    )


def gen_ocr_pairs(
    filtered_tokens: list[tuple[str, str]],
    seed: int,
) -> tuple[list[LabeledPair], GenerationReport]:
    """Positives are (corrected, observed variant); negatives corrupt the
    corrected token with transformations absent from the observed table,
    one synthetic negative per positive."""
    if not filtered_tokens:
        raise InputError("no aligned tokens survive filtering")
    rng = np.random.default_rng(seed)

    variants: dict[str, list[str]] = {}
    for ocr, corr in filtered_tokens:
        bucket = variants.setdefault(corr, [])
        if ocr not in bucket:
            bucket.append(ocr)

    # the corruption direction: corrected -> observed variant
    observed_ops: set[EditOperation] = set()
    for corr, ocr_list in variants.items():
        for ocr in ocr_list:
            observed_ops.update(edit_script(corr, ocr))
    alphabet = sorted({ch for ocr, corr in filtered_tokens for ch in ocr + corr})
    forbidden = {ocr for ocr, _ in filtered_tokens} | set(variants)

    pairs: list[LabeledPair] = []
    n_pos = 0
    n_neg = 0
    for corr in sorted(variants):
        obs = sorted(variants[corr])
        for v in obs:
            pairs.append(LabeledPair(corr, v, True))
            n_pos += 1
        for _ in obs:
            synth = _synthesize_negative(corr, rng, observed_ops, alphabet, forbidden)
            pairs.append(LabeledPair(corr, synth, False))
            n_neg += 1

    report = GenerationReport(
        mode="ocr",
        counts={"observed_positives": n_pos, "synthetic_negatives": n_neg},
    )
    return pairs, report


# ---------------------------------------------------------------------------
# shared post-processing
# ---------------------------------------------------------------------------


def postprocess(
    pairs: list[LabeledPair],
    seed: int,
    test_ratio: float = 0.10,
) -> tuple[list[LabeledPair], list[LabeledPair], GenerationReport]:
    """Drop empties, deduplicate unordered pairs per label, repair the
    positive/negative balance, and split train+val / test per class so both
    output files stay balanced."""
    rng = np.random.default_rng(seed)
    drops = {"empty_element": 0, "duplicates": 0, "rebalance": 0}

    seen: set[tuple[str, str, bool]] = set()
    unique: list[LabeledPair] = []
    for p in pairs:
        if not p.s1 or not p.s2:
            drops["empty_element"] += 1
            continue
        a, b = sorted((p.s1, p.s2))
        key = (a, b, p.label)
        if key in seen:
            drops["duplicates"] += 1
            continue
        seen.add(key)
        unique.append(p)

    pos_idx = [i for i, p in enumerate(unique) if p.label]
    neg_idx = [i for i, p in enumerate(unique) if not p.label]
    excess = len(pos_idx) - len(neg_idx)
    remove: set[int] = set()
    if excess > 0:
        remove = set(rng.choice(pos_idx, size=excess, replace=False).tolist())
    elif excess < 0:
        remove = set(rng.choice(neg_idx, size=-excess, replace=False).tolist())
    drops["rebalance"] = len(remove)
    balanced = [p for i, p in enumerate(unique) if i not in remove]

    positives = [p for p in balanced if p.label]
    negatives = [p for p in balanced if not p.label]
    train_val: list[LabeledPair] = []
    test: list[LabeledPair] = []
    for group in (positives, negatives):
        n_test = int(round(len(group) * test_ratio))
        perm = rng.permutation(len(group))
        test.extend(group[i] for i in perm[:n_test])
        train_val.extend(group[i] for i in perm[n_test:])
    train_val = [train_val[i] for i in rng.permutation(len(train_val))]
    test = [test[i] for i in rng.permutation(len(test))]

    report = GenerationReport(
        mode="postprocess",
        counts={
            "final_positives": len(positives),
            "final_negatives": len(negatives),
            "train_val_pairs": len(train_val),
            "test_pairs": len(test),
        },
        drops=drops,
    )
    return train_val, test, report
