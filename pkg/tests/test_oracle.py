from __future__ import annotations

import random

import pytest

from conftest import random_db
from mixmine.exceptions import UniverseTooLarge
from mixmine.mining import TransactionDB
from mixmine.oracle import brute_force_frequent, merge_partitions


def test_hand_counted():
    db = TransactionDB.from_iterable([[1, 2], [1, 2], [2]])
    assert brute_force_frequent(db, 0.5).frequents == {(1,): 2, (2,): 3, (1, 2): 2}


def test_threshold_above_one_is_empty():
    db = TransactionDB.from_iterable([[1, 2], [1, 2], [2]])
    assert brute_force_frequent(db, 1.5).frequents == {}


def test_empty_db():
    result = brute_force_frequent(TransactionDB(()), 0.1)
    assert result.frequents == {} and result.rules == ()


def test_universe_limit():
    db = TransactionDB.from_iterable([list(range(21))])
    with pytest.raises(UniverseTooLarge):
        brute_force_frequent(db, 0.5)


def test_explicit_universe_includes_unseen_items():
    db = TransactionDB.from_iterable([[0], [0]])
    assert brute_force_frequent(db, 0, universe=[0, 1]).frequents == {(0,): 2, (1,): 0, (0, 1): 0}


def test_downward_closed(rng):
    result = brute_force_frequent(random_db(rng, 200, 10), 0.1)
    for s in result.frequents:
        for i in range(len(s)):
            if len(s) > 1:
                assert s[:i] + s[i + 1 :] in result.frequents


class TestMerge:
    def test_concat(self):
        merged = merge_partitions([TransactionDB.from_iterable([[0]]), TransactionDB.from_iterable([[1]])])
        assert merged.transactions == ((0,), (1,)) and merged.size == 2

    def test_identity(self):
        db = TransactionDB.from_iterable([[0, 1], [2]])
        assert merge_partitions([db, TransactionDB(())]) == db

    def test_sizes_add(self, rng):
        parts = [random_db(rng, n, 5) for n in (3, 4, 5)]
        assert merge_partitions(parts).size == 12


def test_repartition_invariance():
    rng = random.Random(11)
    db = random_db(rng, 120, 8)
    reference = brute_force_frequent(db, 0.2, 0.5)
    txs = list(db.transactions)
    for _ in range(5):
        rng.shuffle(txs)
        cuts = sorted(rng.sample(range(1, len(txs)), 3))
        parts = [TransactionDB(tuple(txs[a:b])) for a, b in zip([0] + cuts, cuts + [len(txs)])]
        again = brute_force_frequent(merge_partitions(parts), 0.2, 0.5)
        assert again.frequents == reference.frequents and again.rules == reference.rules
