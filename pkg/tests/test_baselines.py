"""Edit distance, similarity, threshold tuning, and baseline retrieval."""

import itertools

import numpy as np
import pytest

from topomatch.baselines import (
    BatchDistanceScorer,
    LevDamRanker,
    ThresholdModel,
    dl_distance,
    dl_similarity,
    exact_candidates,
    levdam_rank,
    tune_threshold,
)
from topomatch.errors import InputError
from topomatch.gazetteer import load_gazetteer
from topomatch.pairs import LabeledPair


def naive_osa(a: str, b: str, i: int | None = None, j: int | None = None) -> int:
    """Exponential-time recursive restatement of the OSA definition; the
    independent oracle for the DP implementation."""
    if i is None:
        i, j = len(a), len(b)
    if i == 0:
        return j
    if j == 0:
        return i
    best = min(
        naive_osa(a, b, i - 1, j) + 1,
        naive_osa(a, b, i, j - 1) + 1,
        naive_osa(a, b, i - 1, j - 1) + (0 if a[i - 1] == b[j - 1] else 1),
    )
    if i > 1 and j > 1 and a[i - 1] == b[j - 2] and a[i - 2] == b[j - 1]:
        best = min(best, naive_osa(a, b, i - 2, j - 2) + 1)
    return best


def all_strings(alphabet: str, max_len: int):
    for n in range(max_len + 1):
        for combo in itertools.product(alphabet, repeat=n):
            yield "".join(combo)


class TestDistance:
    def test_zurich_zmich(self):
        assert dl_distance("Zurich", "Zmich") == 2

    def test_identity(self):
        assert dl_distance("abc", "abc") == 0

    def test_single_transposition(self):
        assert dl_distance("ab", "ba") == 1

    def test_empty_sides(self):
        assert dl_distance("", "abc") == 3
        assert dl_distance("abc", "") == 3

    def test_exhaustive_against_recursive_oracle_len3(self):
        strings = list(all_strings("abc", 3))
        for a in strings:
            for b in strings:
                assert dl_distance(a, b) == naive_osa(a, b), (a, b)

    def test_symmetry_and_bound(self):
        rng = np.random.default_rng(11)
        letters = "abcdef"
        for _ in range(400):
            a = "".join(rng.choice(list(letters), size=rng.integers(0, 9)))
            b = "".join(rng.choice(list(letters), size=rng.integers(0, 9)))
            d = dl_distance(a, b)
            assert d == dl_distance(b, a)
            assert d <= max(len(a), len(b))
            assert (d == 0) == (a == b)


class TestSimilarity:
    def test_zurich_zmich(self):
        assert dl_similarity("Zurich", "Zmich") == pytest.approx(1 - 2 / 6)

    def test_identity(self):
        assert dl_similarity("abcd", "abcd") == 1.0

    def test_disjoint_equal_length(self):
        assert dl_similarity("aaaa", "bbbb") == 0.0

    def test_both_empty(self):
        assert dl_similarity("", "") == 1.0


class TestBatchScorer:
    def test_matches_scalar_on_random_strings(self):
        rng = np.random.default_rng(21)
        letters = list("abcdefgh")
        strings = [
            "".join(rng.choice(letters, size=rng.integers(0, 14))) for _ in range(300)
        ]
        scorer = BatchDistanceScorer(strings)
        for _ in range(25):
            q = "".join(rng.choice(letters, size=rng.integers(0, 14)))
            got = scorer.distances(q)
            want = np.array([dl_distance(q, s) for s in strings])
            assert np.array_equal(got, want), q

    def test_similarities_match_scalar(self):
        strings = ["Zurich", "Zmich", "", "Zürich"]
        scorer = BatchDistanceScorer(strings)
        got = scorer.similarities("Zurich")
        want = np.array([dl_similarity("Zurich", s) for s in strings])
        np.testing.assert_allclose(got, want, atol=1e-12)

    def test_empty_universe(self):
        assert BatchDistanceScorer([]).distances("abc").size == 0


class TestTuneThreshold:
    def test_separable(self):
        pairs = [LabeledPair("aa", "aa", True)] * 3 + [LabeledPair("aa", "zz", False)] * 3
        model = tune_threshold(pairs)
        assert model.train_f1 == 1.0
        # smallest observed threshold achieving F1=1 is sim 1.0
        assert model.threshold == 1.0

    def test_hand_worked_case(self):
        # sims: positives {0.8, 0.6}, negatives {0.7, 0.2}
        # threshold 0.8 -> P=1, R=0.5, F1=2/3; threshold 0.6 -> P=2/3, R=1, F1=0.8
        pairs = [
            LabeledPair("aaaaa", "aaaab", True),        # 0.8
            LabeledPair("aaaaa", "aaabb", True),        # 0.6
            LabeledPair("aaaaaaaaaa", "aaaaaaabbb", False),  # 0.7
            LabeledPair("aaaaa", "abbbb", False),       # 0.2
        ]
        sims = [dl_similarity(p.s1, p.s2) for p in pairs]
        assert sims == pytest.approx([0.8, 0.6, 0.7, 0.2])
        model = tune_threshold(pairs)
        assert model.threshold == pytest.approx(0.6)
        assert model.train_f1 == pytest.approx(0.8)

    def test_applied_to_training_set_reproduces_f1(self):
        rng = np.random.default_rng(5)
        letters = list("abcd")
        pairs = []
        for i in range(60):
            a = "".join(rng.choice(letters, size=6))
            b = "".join(rng.choice(letters, size=6))
            pairs.append(LabeledPair(a, b, bool(i % 2)))
        model = tune_threshold(pairs)
        preds = [dl_similarity(p.s1, p.s2) >= model.threshold for p in pairs]
        labels = [p.label for p in pairs]
        tp = sum(p and l for p, l in zip(preds, labels))
        fp = sum(p and not l for p, l in zip(preds, labels))
        fn = sum(not p and l for p, l in zip(preds, labels))
        f1 = 2 * tp / (2 * tp + fp + fn) if tp else 0.0
        assert f1 == pytest.approx(model.train_f1)

    def test_single_class_errors(self):
        with pytest.raises(InputError):
            tune_threshold([LabeledPair("a", "a", True)])

    def test_ties_take_smallest_threshold(self):
        # both 0.5 and 1.0 achieve F1=1 here; 0.5 is smaller
        pairs = [
            LabeledPair("aa", "aa", True),      # sim 1.0
            LabeledPair("aaaa", "aabb", True),  # sim 0.5
            LabeledPair("aaaa", "bbbb", False), # sim 0.0
        ]
        model = tune_threshold(pairs)
        assert model.threshold == pytest.approx(0.5)
        assert model.train_f1 == 1.0

    def test_predict(self):
        assert ThresholdModel(0.5, 1.0).predict(0.5)
        assert not ThresholdModel(0.5, 1.0).predict(0.49)


@pytest.fixture
def small_gazetteer(tmp_path):
    path = tmp_path / "gz.tsv"
    rows = [
        ("A1", "Manchester", 53.48, -2.24, "Manchester"),
        ("A1", "Manchester", 53.48, -2.24, "MANCHESTER"),
        ("B2", "Manchester", 42.99, -71.46, "Manchester"),
        ("C3", "Leeds", 53.80, -1.55, "Leeds"),
    ]
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write("\t".join(str(x) for x in row) + "\n")
    return load_gazetteer(path)


class TestExactCandidates:
    def test_case_insensitive(self, small_gazetteer):
        got = exact_candidates("manchester", small_gazetteer)
        assert got == {"Manchester", "MANCHESTER"}

    def test_miss(self, small_gazetteer):
        assert exact_candidates("Manchestr", small_gazetteer) == frozenset()

    def test_union_of_ids_behind_match(self, small_gazetteer):
        matches = exact_candidates("Manchester", small_gazetteer)
        ids = set()
        for m in matches:
            ids.update(small_gazetteer.alt_index[m])
        assert ids == {"A1", "B2"}


class TestLevDamRank:
    def test_verbatim_query_ranks_first(self):
        r = levdam_rank("Leeds", ["Leeds", "Leede", "London"], k=2)
        assert r.items[0].altname == "Leeds"
        assert r.items[0].distance == 0.0

    def test_agrees_with_sort_oracle(self):
        rng = np.random.default_rng(31)
        letters = list("abcdef")
        altnames = sorted(
            {"".join(rng.choice(letters, size=rng.integers(1, 10))) for _ in range(500)}
        )
        ranker = LevDamRanker(altnames)
        for _ in range(10):
            q = "".join(rng.choice(letters, size=rng.integers(1, 10)))
            got = ranker.rank(q, k=20)
            oracle = sorted(altnames, key=lambda s: (1.0 - dl_similarity(q, s), s))[:20]
            assert [c.altname for c in got.items] == oracle

    def test_ties_lexicographic(self):
        r = levdam_rank("ab", ["ax", "ay", "az"], k=3)
        assert [c.altname for c in r.items] == ["ax", "ay", "az"]

    def test_distance_is_one_minus_similarity(self):
        r = levdam_rank("abcd", ["abcx"], k=1)
        assert r.items[0].distance == pytest.approx(1 - dl_similarity("abcd", "abcx"))

    def test_k_validation(self):
        with pytest.raises(InputError):
            levdam_rank("a", ["a"], k=0)
