from __future__ import annotations

import random
from fractions import Fraction
from itertools import combinations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_db
from mixmine.exceptions import AlignmentMismatch, MissingSubsetCount
from mixmine.mining import (
    CandidateSet,
    FrequentSet,
    TransactionDB,
    apriori,
    apriori_join,
    apriori_prune,
    as_fraction,
    compute_frequent,
    count_supports,
    generate_rules,
    make_itemset,
    support_threshold,
)
from mixmine.oracle import brute_force_frequent

A, B, C, D = 0, 1, 2, 3


def fs(k, *sets, count=1):
    return FrequentSet(k, tuple((tuple(s), count) for s in sorted(sets)))


def test_make_itemset():
    assert make_itemset([3, 1, 3, 2]) == (1, 2, 3)
    with pytest.raises(ValueError):
        make_itemset([-1])


def test_threshold_is_exact():
    assert as_fraction(0.8) == Fraction(4, 5)
    assert support_threshold(0.2, 10) == 2
    assert support_threshold(0.4, 60) == 24
    assert support_threshold(0.1, 30) == 3  # 0.1 * 30 is 3.0000000000000004 in floats


class TestJoin:
    def test_singletons(self):
        assert apriori_join(fs(1, (A,), (B,), (C,))) == [(A, B), (A, C), (B, C)]

    def test_one_join(self):
        assert apriori_join(fs(2, (A, B), (A, C), (B, C))) == [(A, B, C)]

    def test_no_shared_prefix(self):
        assert apriori_join(fs(2, (A, B), (C, D))) == []


class TestPrune:
    def test_keeps_when_all_subsets_frequent(self):
        prev = fs(2, (A, B), (A, C), (B, C))
        assert apriori_prune([(A, B, C)], prev).candidates == ((A, B, C),)

    def test_drops_missing_subset(self):
        prev = fs(2, (A, B), (A, C))
        assert apriori_prune([(A, B, C)], prev).candidates == ()

    def test_random_against_subset_filter(self):
        rng = random.Random(5)
        for _ in range(200):
            items = range(8)
            l2 = [p for p in combinations(items, 2) if rng.random() < 0.5]
            prev = fs(2, *l2)
            joined = apriori_join(prev)
            # exhaustive: every 3-set whose three 2-subsets are all in l2
            expected = [t for t in combinations(items, 3) if all(s in set(l2) for s in combinations(t, 2))]
            assert list(apriori_prune(joined, prev).candidates) == expected


class TestCountSupports:
    def test_empty_db(self):
        cands = CandidateSet(1, ((1,), (2,)))
        assert count_supports(TransactionDB(()), cands) == [0, 0]

    def test_hand_count(self):
        db = TransactionDB.from_iterable([[1, 2], [1, 2, 3], [2, 3]])
        cands = CandidateSet(2, ((1, 2), (1, 3), (2, 3)))
        assert count_supports(db, cands) == [2, 1, 2]

    def test_item_in_every_transaction(self):
        db = TransactionDB.from_iterable([[5, 1], [5], [2, 5, 7]])
        assert count_supports(db, CandidateSet(1, ((5,),))) == [3]

    def test_empty_itemset_counts_everything(self):
        db = TransactionDB.from_iterable([[1], [], [2]])
        assert count_supports(db, CandidateSet(0, ((),))) == [3]

    def test_both_counting_paths_agree(self, rng):
        db = random_db(rng, 200, 12, 0.5)
        for k in (1, 2, 3, 4):
            cands = CandidateSet(k, tuple(combinations(range(12), k)))
            few = CandidateSet(k, cands.candidates[:3])
            naive = [sum(1 for t in db.transactions if set(c) <= set(t)) for c in cands.candidates]
            assert count_supports(db, cands) == naive
            assert count_supports(db, few) == naive[:3]


class TestComputeFrequent:
    def test_threshold(self):
        cands = CandidateSet(1, ((0,), (1,)))
        out = compute_frequent(cands, [3, 1], 10, 0.2)
        assert out.entries == (((0,), 3),)

    def test_minsup_zero_keeps_all(self):
        cands = CandidateSet(1, ((0,), (1,)))
        assert len(compute_frequent(cands, [0, 0], 10, 0)) == 2

    def test_alignment(self):
        with pytest.raises(AlignmentMismatch):
            compute_frequent(CandidateSet(1, ((0,),)), [1, 2], 10, 0.1)

    def test_random_against_filter(self, rng):
        for _ in range(100):
            n = rng.randint(1, 30)
            cands = CandidateSet(1, tuple((i,) for i in range(n)))
            counts = [rng.randint(0, 50) for _ in range(n)]
            minsup = rng.choice([0.1, 0.25, 0.5, 0.8])
            threshold = -(-int(minsup * 100) * 50 // 100)  # ceil(minsup * 50), minsup has 2 decimals
            expected = [((i,), c) for i, c in enumerate(counts) if c >= threshold]
            assert list(compute_frequent(cands, counts, 50, minsup).entries) == expected


class TestRules:
    def levels(self):
        return [
            FrequentSet(1, (((A,), 10), ((B,), 9), ((C,), 5))),
            FrequentSet(2, (((A, B), 8), ((A, C), 4), ((B, C), 4))),
            FrequentSet(3, (((A, B, C), 4),)),
        ]

    def test_ab_implies_c(self):
        rules = generate_rules(self.levels(), 20, 0.5)
        rule = next(r for r in rules if r.antecedent == (A, B) and r.consequent == (C,))
        assert rule.support == Fraction(1, 5)
        assert rule.confidence == Fraction(1, 2)

    def test_minconf_zero_emits_all(self):
        rules = generate_rules(self.levels(), 20, 0)
        assert len(rules) == 3 * (2**2 - 2) + (2**3 - 2)

    def test_confidence_one(self):
        rules = generate_rules(self.levels(), 20, 0)
        rule = next(r for r in rules if r.antecedent == (A, C) and r.consequent == (B,))
        assert rule.confidence == 1

    def test_missing_subset(self):
        with pytest.raises(MissingSubsetCount):
            generate_rules([FrequentSet(2, (((A, B), 3),))], 10, 0.1)

    def test_rule_soundness(self, rng):
        db = random_db(rng, 300, 10, 0.4)
        levels = apriori(db, 0.1)
        counts = {s: n for l in levels for s, n in l.entries}
        for r in generate_rules(levels, db.size, 0.6):
            union = make_itemset(r.antecedent + r.consequent)
            assert not set(r.antecedent) & set(r.consequent)
            assert r.support == Fraction(counts[union], db.size)
            assert r.confidence == Fraction(counts[union], counts[r.antecedent]) >= Fraction(3, 5)


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.lists(st.integers(0, 14), max_size=8), min_size=1, max_size=500),
    st.sampled_from([0.05, 0.1, 0.2, 0.4, 0.7]),
)
def test_apriori_equals_brute_force(rows, minsup):
    db = TransactionDB.from_iterable(rows)
    got = {s: n for l in apriori(db, minsup) for s, n in l.entries}
    assert got == brute_force_frequent(db, minsup).frequents


def test_anti_monotone_and_deterministic(rng):
    db = random_db(rng, 400, 12, 0.4)
    levels = apriori(db, 0.05)
    assert levels == apriori(db, 0.05)
    counts = {s: n for l in levels for s, n in l.entries}
    for z, cz in counts.items():
        for size in range(1, len(z)):
            for x in combinations(z, size):
                assert counts[x] >= cz
    for l in levels:
        assert list(l.itemsets) == sorted(l.itemsets)
