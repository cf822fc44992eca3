"""Pair dataset generation: gazetteer mode, OCR mode, post-processing."""

from collections import Counter

import numpy as np
import pytest

from topomatch.baselines import dl_similarity
from topomatch.errors import InputError
from topomatch.gazetteer import Gazetteer, GazetteerEntry, haversine_km
from topomatch.pairgen import (
    CHALLENGING_NEGATIVE,
    CHALLENGING_POSITIVE,
    TRIVIAL_NEGATIVE,
    TRIVIAL_POSITIVE,
    EditOperation,
    edit_script,
    filter_ocr_pairs,
    gen_gazetteer_pairs,
    gen_ocr_pairs,
    generate_gazetteer_pairs_categorized,
    postprocess,
)
from topomatch.pairs import LabeledPair
from topomatch.preprocess import PreprocessOptions


def make_gazetteer(entries):
    table = {}
    for loc_id, primary, lat, lon, altnames in entries:
        table[loc_id] = GazetteerEntry(
            location_id=loc_id, primary_name=primary, lat=lat, lon=lon,
            altnames=frozenset(altnames),
        )
    return Gazetteer(entries=table, options=PreprocessOptions())


@pytest.fixture
def toy_gazetteer():
    # mirrors the published example table: one entity with spelling and
    # case variants, lookalike entities far away, dissimilar fillers, and
    # one nearby twin that the geographic filter must exclude
    return make_gazetteer([
        ("E1", "Aintourine", 34.2, 35.9, {"Aintourine", "AINTOURINE", "Aïn Toûrîne", "Am Toûrîne"}),
        ("E2", "Tigantourine", 27.9, 9.1, {"Tigantourine", "Tiguentourine"}),
        ("E3", "Haagsche Bosch", 52.1, 4.3, {"Haagsche Bosch"}),
        ("E4", "Sorkhankalateh", 37.4, 55.1, {"Sorkhankalateh"}),
        ("E5", "Aintourine Mills", 34.25, 35.9, {"Aintourine Mills"}),  # ~5.6 km from E1
    ])


class TestGazetteerMode:
    def test_published_example_pairs(self, toy_gazetteer):
        pairs, report = gen_gazetteer_pairs(toy_gazetteer, seed=3)
        got = {(p.s1, p.s2, p.label) for p in pairs}
        assert ("Aintourine", "Aïn Toûrîne", True) in got
        neg_partners = {
            p.s2 for p in pairs
            if not p.label and p.s1 in ("AINTOURINE", "Aintourine", "Am Toûrîne", "Aïn Toûrîne")
        }
        assert "Tigantourine" in neg_partners or "Tiguentourine" in neg_partners

    def test_balanced_overall_and_per_category(self, toy_gazetteer):
        pairs, report = gen_gazetteer_pairs(toy_gazetteer, seed=3)
        assert report.positives == report.negatives
        assert report.counts["trivial_positives"] == report.counts["trivial_negatives"]
        assert report.counts["challenging_positives"] == report.counts["challenging_negatives"]
        labels = Counter(p.label for p in pairs)
        assert labels[True] == labels[False]

    def test_degenerate_entity_contributes_only_trivial(self):
        gz = make_gazetteer([
            ("A", "Zzzzqx", 10.0, 10.0, {"Zzzzqx"}),
            ("B", "Mmmmpo", -40.0, 120.0, {"Mmmmpo"}),
        ])
        tagged = generate_gazetteer_pairs_categorized(gz, seed=0)
        kinds = {tag for _, tag in tagged}
        assert CHALLENGING_POSITIVE not in kinds
        assert CHALLENGING_NEGATIVE not in kinds
        assert TRIVIAL_POSITIVE in kinds and TRIVIAL_NEGATIVE in kinds

    def test_geographic_exclusion(self, toy_gazetteer):
        # E5 sits ~5.6 km from E1 with a near-identical name: it must never
        # appear as a challenging negative of E1's names
        tagged = generate_gazetteer_pairs_categorized(toy_gazetteer, seed=3)
        for pair, tag in tagged:
            if tag == CHALLENGING_NEGATIVE:
                d = _min_distance(toy_gazetteer, pair)
                assert d > 50.0, pair

    def test_challenging_negative_distance_property(self):
        rng = np.random.default_rng(8)
        entries = []
        for i in range(14):
            name = "".join(rng.choice(list("abcdef"), size=6))
            variants = {name, name[:-1] + "x", name.upper()}
            entries.append(
                (f"L{i}", name, float(rng.uniform(-80, 80)), float(rng.uniform(-170, 170)), variants)
            )
        gz = make_gazetteer(entries)
        tagged = generate_gazetteer_pairs_categorized(gz, seed=1)
        for pair, tag in tagged:
            if tag == CHALLENGING_NEGATIVE:
                assert _min_distance(gz, pair) > 50.0

    def test_challenging_positives_pass_similarity_floor(self, toy_gazetteer):
        tagged = generate_gazetteer_pairs_categorized(toy_gazetteer, seed=3)
        for pair, tag in tagged:
            if tag == CHALLENGING_POSITIVE:
                assert dl_similarity(pair.s1, pair.s2) > 0.25

    def test_determinism(self, toy_gazetteer):
        a, _ = gen_gazetteer_pairs(toy_gazetteer, seed=9)
        b, _ = gen_gazetteer_pairs(toy_gazetteer, seed=9)
        assert a == b

    def test_too_small_gazetteer(self):
        gz = make_gazetteer([("A", "Solo", 0.0, 0.0, {"Solo"})])
        with pytest.raises(InputError):
            gen_gazetteer_pairs(gz, seed=0)


def _min_distance(gz, pair):
    ids1 = [e.location_id for e in gz.entries.values() if pair.s1 in e.altnames]
    ids2 = [e.location_id for e in gz.entries.values() if pair.s2 in e.altnames]
    best = float("inf")
    for a in ids1:
        for b in ids2:
            ea, eb = gz.entries[a], gz.entries[b]
            best = min(best, haversine_km(ea.lat, ea.lon, eb.lat, eb.lon))
    return best


class TestEditScript:
    def test_substitution(self):
        ops = edit_script("Jagclman", "Jagelman")
        assert ops == (EditOperation("substitute", "c", "e"),)

    def test_insert_delete(self):
        assert edit_script("ab", "acb") == (EditOperation("insert", "", "c"),)
        assert edit_script("acb", "ab") == (EditOperation("delete", "c", ""),)

    def test_script_length_equals_distance(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            a = "".join(rng.choice(list("abcd"), size=rng.integers(0, 8)))
            b = "".join(rng.choice(list("abcd"), size=rng.integers(0, 8)))
            script = edit_script(a, b)
            # plain Levenshtein (no transposition) equals the script length
            la, lb = len(a), len(b)
            dp = [[0] * (lb + 1) for _ in range(la + 1)]
            for i in range(la + 1):
                dp[i][0] = i
            for j in range(lb + 1):
                dp[0][j] = j
            for i in range(1, la + 1):
                for j in range(1, lb + 1):
                    dp[i][j] = min(
                        dp[i - 1][j] + 1,
                        dp[i][j - 1] + 1,
                        dp[i - 1][j - 1] + (a[i - 1] != b[j - 1]),
                    )
            assert len(script) == dp[la][lb]

    def test_validation(self):
        with pytest.raises(ValueError):
            EditOperation("substitute", "a", "a").validate()
        with pytest.raises(ValueError):
            EditOperation("insert", "x", "y").validate()
        EditOperation("delete", "x", "").validate()


class TestOcrFilter:
    def test_rule_identical(self):
        kept, drops = filter_ocr_pairs([("Zurich", "Zurich")])
        assert kept == [] and drops["identical"] == 1

    def test_rule_short(self):
        kept, drops = filter_ocr_pairs([("Z", "Zurich")])
        assert kept == [] and drops["short_ocr"] == 1

    def test_rule_substring_both_directions(self):
        kept, drops = filter_ocr_pairs([("Zuri", "Zurich"), ("Zurichh", "Zurich")])
        assert kept == [] and drops["substring"] == 2

    def test_rule_hyphen(self):
        kept, drops = filter_ocr_pairs([("Newyork", "New-York")])
        assert kept == [] and drops["hyphen"] == 1

    def test_rule_non_alphabetic(self):
        kept, drops = filter_ocr_pairs([("Zorich", "Zur1ch")])
        assert kept == [] and drops["non_alphabetic"] == 1

    def test_rule_singleton_operation(self):
        # c->e occurs once: dropped; with a second witness both survive
        kept, drops = filter_ocr_pairs([("Jagclman", "Jagelman")])
        assert kept == [] and drops["singleton_operation"] == 1
        kept, drops = filter_ocr_pairs([("Jagclman", "Jagelman"), ("clat", "elat")])
        assert len(kept) == 2 and drops["singleton_operation"] == 0

    def test_first_matching_rule_counts(self):
        # identical wins over substring
        _, drops = filter_ocr_pairs([("Same", "Same")])
        assert drops["identical"] == 1 and drops["substring"] == 0


class TestOcrGeneration:
    def test_balance_per_corrected_token(self):
        tokens = [
            ("Mclbourne", "Melbourne"),
            ("Mclbourn", "Melbourn"),
            ("Brcmen", "Bremen"),
            ("Brcman", "Breman"),
            ("Melbuorne", "Melbourne"),
            ("Melbovrne", "Melbourne"),
            ("Bremon", "Bremen"),
        ]
        kept, _ = filter_ocr_pairs(tokens)
        pairs, report = gen_ocr_pairs(kept, seed=5)
        by_corr = Counter((p.s1, p.label) for p in pairs)
        for corr in {c for _, c in kept}:
            assert by_corr[(corr, True)] == by_corr[(corr, False)]
        assert report.positives == report.negatives

    def test_synthetic_negatives_contain_unobserved_operation(self):
        tokens = [
            ("Mclbourne", "Melbourne"),
            ("Mclbourn", "Melbourn"),
            ("Bremon", "Bremen"),
            ("Bremon", "Bromen"),
        ]
        kept, _ = filter_ocr_pairs(tokens)
        pairs, _ = gen_ocr_pairs(kept, seed=7)
        observed = set()
        for p in pairs:
            if p.label:
                observed.update(edit_script(p.s1, p.s2))
        for p in pairs:
            if not p.label:
                script = edit_script(p.s1, p.s2)
                assert any(op not in observed for op in script), p

    def test_negatives_never_collide_with_positives(self):
        tokens = [("Mclbourne", "Melbourne"), ("Mclbourn", "Melbourn")]
        kept, _ = filter_ocr_pairs(tokens)
        pairs, _ = gen_ocr_pairs(kept, seed=1)
        positive_strings = {p.s2 for p in pairs if p.label} | {p.s1 for p in pairs}
        for p in pairs:
            if not p.label:
                assert p.s2 not in positive_strings
                assert p.s2 != p.s1

    def test_determinism(self):
        tokens = [("Mclbourne", "Melbourne"), ("Mclbourn", "Melbourn")]
        kept, _ = filter_ocr_pairs(tokens)
        a, _ = gen_ocr_pairs(kept, seed=3)
        b, _ = gen_ocr_pairs(kept, seed=3)
        assert a == b

    def test_alphabet_too_small(self):
        # every possible single-letter edit is already observed
        tokens = [("aa", "aaa"), ("aaaa", "aaa")]
        with pytest.raises(InputError, match="alphabet too small"):
            gen_ocr_pairs(tokens, seed=0)


class TestPostprocess:
    def test_reverse_duplicate_removed(self):
        pairs = [
            LabeledPair("Florence", "Firenze", True),
            LabeledPair("Firenze", "Florence", True),
            LabeledPair("Paris", "London", False),
        ]
        train_val, test, report = postprocess(pairs, seed=0, test_ratio=0.0)
        texts = [(p.s1, p.s2, p.label) for p in train_val + test]
        assert len([t for t in texts if t[2]]) == 1
        assert report.drops["duplicates"] == 1

    def test_dedup_can_restore_balance_without_repair(self):
        # 12 positives dedup to 10; negatives already 10; nothing to trim
        pairs = [LabeledPair(f"a{i}", f"b{i}", True) for i in range(10)]
        pairs += [LabeledPair(f"b{i}", f"a{i}", True) for i in range(2)]
        pairs += [LabeledPair(f"c{i}", f"d{i}", False) for i in range(10)]
        train_val, test, report = postprocess(pairs, seed=1, test_ratio=0.0)
        final = train_val + test
        pos = sum(1 for p in final if p.label)
        assert pos == len(final) - pos == 10
        assert report.drops["duplicates"] == 2
        assert report.drops["rebalance"] == 0

    def test_rebalance_after_asymmetric_dedup(self):
        # 9 unique positives after the reverse duplicate collapses, 10
        # negatives: one negative must be trimmed
        pairs = [LabeledPair("x", "y", True), LabeledPair("y", "x", True)]
        pairs += [LabeledPair(f"p{i}", f"q{i}", True) for i in range(8)]
        pairs += [LabeledPair(f"m{i}", f"n{i}", False) for i in range(10)]
        train_val, test, report = postprocess(pairs, seed=2, test_ratio=0.0)
        final = train_val + test
        pos = sum(1 for p in final if p.label)
        neg = len(final) - pos
        assert pos == neg == 9
        assert report.drops["duplicates"] == 1
        assert report.drops["rebalance"] == 1

    def test_empty_element_dropped(self):
        pairs = [LabeledPair("", "Paris", False), LabeledPair("a", "b", True),
                 LabeledPair("c", "d", False)]
        train_val, test, report = postprocess(pairs, seed=0, test_ratio=0.0)
        assert report.drops["empty_element"] == 1
        assert all(p.s1 and p.s2 for p in train_val + test)

    def test_no_duplicate_unordered_pairs_in_output(self):
        rng = np.random.default_rng(3)
        pairs = []
        for _ in range(300):
            a = "".join(rng.choice(list("ab"), size=3))
            b = "".join(rng.choice(list("ab"), size=3))
            pairs.append(LabeledPair(a, b, bool(rng.integers(0, 2))))
        train_val, test, _ = postprocess(pairs, seed=4, test_ratio=0.1)
        keys = [(*sorted((p.s1, p.s2)), p.label) for p in train_val + test]
        assert len(keys) == len(set(keys))

    def test_split_sizes_and_balance(self):
        pairs = [LabeledPair(f"a{i}", f"b{i}", True) for i in range(50)]
        pairs += [LabeledPair(f"c{i}", f"d{i}", False) for i in range(50)]
        train_val, test, _ = postprocess(pairs, seed=5, test_ratio=0.10)
        assert len(test) == 10 and len(train_val) == 90
        assert sum(1 for p in test if p.label) == 5
        assert sum(1 for p in train_val if p.label) == 45

    def test_byte_determinism(self, tmp_path):
        from topomatch.pairs import write_pairs_file

        rng = np.random.default_rng(6)
        pairs = [
            LabeledPair(
                "".join(rng.choice(list("abcd"), size=5)),
                "".join(rng.choice(list("abcd"), size=5)),
                bool(rng.integers(0, 2)),
            )
            for _ in range(100)
        ]
        out = []
        for name in ("r1", "r2"):
            train_val, test, _ = postprocess(list(pairs), seed=9)
            write_pairs_file(tmp_path / f"{name}.tsv", train_val + test)
            out.append((tmp_path / f"{name}.tsv").read_bytes())
        assert out[0] == out[1]
