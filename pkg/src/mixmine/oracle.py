"""Centralized plaintext references for testing the distributed run.

:func:`brute_force_frequent` enumerates every subset of the item universe
with a bitmask per transaction.  It shares no code with the join/prune path,
so a bug there cannot hide in both.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .exceptions import UniverseTooLarge
from .mining import FrequentSet, Itemset, Rule, TransactionDB, generate_rules

MAX_UNIVERSE = 20
_CHUNK = 4096


@dataclass(frozen=True)
class OracleResult:
    frequents: dict[Itemset, int]
    rules: tuple[Rule, ...]

    def levels(self) -> list[FrequentSet]:
        """Regroup as sorted FrequentSets, one per itemset size."""
        by_k: dict[int, list] = {}
        for s, n in self.frequents.items():
            by_k.setdefault(len(s), []).append((s, n))
        return [FrequentSet(k, tuple(sorted(by_k[k]))) for k in sorted(by_k)]


def brute_force_frequent(
    db: TransactionDB, minsup, minconf=1, universe: Iterable[int] | None = None
) -> OracleResult:
    """Every itemset with count >= ceil(minsup * size), by exhaustive enumeration."""
    items = sorted(set(universe) if universe is not None else {i for t in db.transactions for i in t})
    if len(items) > MAX_UNIVERSE:
        raise UniverseTooLarge(f"{len(items)} items; the oracle handles at most {MAX_UNIVERSE}")
    if db.size == 0:
        return OracleResult({}, ())
    minsup = Fraction(repr(minsup)) if isinstance(minsup, float) else Fraction(minsup)
    threshold = math.ceil(minsup * db.size)

    bit = {item: 1 << pos for pos, item in enumerate(items)}
    masks = np.array([sum(bit.get(i, 0) for i in set(t)) for t in db.transactions], dtype=np.int64)

    frequents = {}
    all_subsets = np.arange(1, 1 << len(items), dtype=np.int64)
    for start in range(0, len(all_subsets), _CHUNK):
        block = all_subsets[start : start + _CHUNK]
        counts = ((masks[None, :] & block[:, None]) == block[:, None]).sum(axis=1)
        for subset, count in zip(block[counts >= threshold].tolist(), counts[counts >= threshold].tolist()):
            key = tuple(item for pos, item in enumerate(items) if subset >> pos & 1)
            frequents[key] = int(count)

    levels = OracleResult(frequents, ()).levels()
    rules = tuple(generate_rules(levels, db.size, minconf))
    return OracleResult(dict(sorted(frequents.items(), key=lambda kv: (len(kv[0]), kv[0]))), rules)


def merge_partitions(dbs: Sequence[TransactionDB]) -> TransactionDB:
    """Concatenate partitions in order."""
    return TransactionDB(tuple(t for db in dbs for t in db.transactions))
