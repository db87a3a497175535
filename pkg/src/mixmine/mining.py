"""Apriori building blocks: join, prune, count, threshold, rules.

Itemsets are plain tuples of strictly increasing non-negative ints.  Tuple
comparison gives the canonical lexicographic order, and the position of a
candidate in that order is its index on the wire.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Sequence

from .exceptions import AlignmentMismatch, MissingSubsetCount

Itemset = tuple[int, ...]


def make_itemset(items: Iterable[int]) -> Itemset:
    """Canonical form: sorted, duplicates removed."""
    out = tuple(sorted(set(int(i) for i in items)))
    if out and out[0] < 0:
        raise ValueError(f"item ids must be non-negative, got {out[0]}")
    return out


def as_fraction(value) -> Fraction:
    """Exact rational for a threshold.  Floats go through their shortest repr,
    so ``0.8`` becomes ``4/5`` rather than the nearest binary double."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        return Fraction(repr(value))
    return Fraction(value)


def support_threshold(minsup, total_size: int) -> int:
    """Minimum support count, ``ceil(minsup * total_size)``."""
    return math.ceil(as_fraction(minsup) * total_size)


@dataclass(frozen=True)
class TransactionDB:
    transactions: tuple[Itemset, ...]
    _sets: tuple[frozenset, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        txs = tuple(make_itemset(t) for t in self.transactions)
        object.__setattr__(self, "transactions", txs)
        object.__setattr__(self, "_sets", tuple(frozenset(t) for t in txs))

    @classmethod
    def from_iterable(cls, transactions: Iterable[Iterable[int]]) -> "TransactionDB":
        return cls(tuple(tuple(t) for t in transactions))

    @property
    def size(self) -> int:
        return len(self.transactions)

    def __len__(self) -> int:
        return len(self.transactions)

    def items(self) -> Itemset:
        """Every item id that occurs in some transaction."""
        return make_itemset(i for t in self.transactions for i in t)


@dataclass(frozen=True)
class CandidateSet:
    k: int
    candidates: tuple[Itemset, ...]

    def __post_init__(self):
        cands = tuple(sorted(set(tuple(c) for c in self.candidates)))
        if any(len(c) != self.k for c in cands):
            raise ValueError(f"all candidates must have {self.k} items")
        object.__setattr__(self, "candidates", cands)

    def __len__(self) -> int:
        return len(self.candidates)


@dataclass(frozen=True)
class FrequentSet:
    k: int
    entries: tuple[tuple[Itemset, int], ...]

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def itemsets(self) -> tuple[Itemset, ...]:
        return tuple(s for s, _ in self.entries)

    def as_dict(self) -> dict[Itemset, int]:
        return dict(self.entries)


@dataclass(frozen=True)
class Rule:
    antecedent: Itemset
    consequent: Itemset
    support: Fraction
    confidence: Fraction
    count: int = 0
    antecedent_count: int = 0

    def __str__(self) -> str:
        return (
            f"{set(self.antecedent)} => {set(self.consequent)} "
            f"(support={float(self.support):.6f}, confidence={float(self.confidence):.6f})"
        )


def initial_candidates(universe: Iterable[int]) -> CandidateSet:
    """C_1: every item of the public item universe as a singleton."""
    return CandidateSet(1, tuple((i,) for i in make_itemset(universe)))


def apriori_join(prev: FrequentSet) -> list[Itemset]:
    """Join (k-1)-itemsets that agree on their first k-2 items."""
    sets = sorted(prev.itemsets)
    out = []
    for i, a in enumerate(sets):
        for b in sets[i + 1 :]:
            if a[:-1] != b[:-1]:
                # sorted, so no later b shares a's prefix either
                break
            out.append(a + (b[-1],))
    return out


def apriori_prune(joined: Sequence[Itemset], prev: FrequentSet) -> CandidateSet:
    """Drop every joined itemset that has an infrequent (k-1)-subset."""
    known = set(prev.itemsets)
    k = prev.k + 1
    keep = [c for c in joined if all(sub in known for sub in combinations(c, k - 1))]
    return CandidateSet(k, tuple(keep))


def next_candidates(prev: FrequentSet) -> CandidateSet:
    return apriori_prune(apriori_join(prev), prev)


def count_supports(db: TransactionDB, cands: CandidateSet) -> list[int]:
    """How many transactions contain each candidate, in candidate order."""
    counts = [0] * len(cands.candidates)
    if not counts:
        return counts
    index = {c: j for j, c in enumerate(cands.candidates)}
    k = cands.k
    for tx, txset in zip(db.transactions, db._sets):
        if len(tx) < k:
            continue
        # enumerate the transaction's k-subsets when that is cheaper
        if math.comb(len(tx), k) <= len(index):
            for sub in combinations(tx, k):
                j = index.get(sub)
                if j is not None:
                    counts[j] += 1
        else:
            for j, c in enumerate(cands.candidates):
                if txset.issuperset(c):
                    counts[j] += 1
    return counts


def compute_frequent(cands: CandidateSet, global_counts: Sequence[int], total_size: int, minsup) -> FrequentSet:
    if len(global_counts) != len(cands.candidates):
        raise AlignmentMismatch(f"{len(global_counts)} counts for {len(cands.candidates)} candidates")
    if total_size < 1:
        raise ValueError("total_size must be at least 1")
    threshold = support_threshold(minsup, total_size)
    entries = tuple(
        (c, int(n)) for c, n in zip(cands.candidates, global_counts) if n >= threshold
    )
    return FrequentSet(cands.k, entries)


def generate_rules(all_frequent: Sequence[FrequentSet], total_size: int, minconf) -> list[Rule]:
    """Association rules ``X => Z \\ X`` for every frequent ``Z`` and proper subset ``X``.

    Output order: itemsets by size then lexicographically, antecedents the same.

    Raises:
        MissingSubsetCount: some subset of a frequent itemset has no count.
    """
    minconf = as_fraction(minconf)
    counts: dict[Itemset, int] = {}
    for fs in all_frequent:
        counts.update(fs.entries)
    rules = []
    for z in sorted(counts, key=lambda s: (len(s), s)):
        if len(z) < 2:
            continue
        cz = counts[z]
        for size in range(1, len(z)):
            for x in combinations(z, size):
                try:
                    cx = counts[x]
                except KeyError:
                    raise MissingSubsetCount(f"no count for {x}, a subset of {z}") from None
                if cx == 0:
                    continue
                conf = Fraction(cz, cx)
                if conf >= minconf:
                    y = tuple(i for i in z if i not in x)
                    rules.append(Rule(x, y, Fraction(cz, total_size), conf, cz, cx))
    return rules


def apriori(db: TransactionDB, minsup, universe: Iterable[int] | None = None) -> list[FrequentSet]:
    """Centralized Apriori to fixpoint.  Returns the non-empty L_1, L_2, ..."""
    if db.size == 0:
        return []
    cands = initial_candidates(db.items() if universe is None else universe)
    levels = []
    while cands.candidates:
        level = compute_frequent(cands, count_supports(db, cands), db.size, minsup)
        if not level.entries:
            break
        levels.append(level)
        cands = next_candidates(level)
    return levels
