"""FIMI-style dataset loading and horizontal partitioning."""

from __future__ import annotations

import os
from importlib import resources
from typing import Sequence

from .exceptions import EmptyDataset, ParseError, TooFewSites
from .mining import TransactionDB
from .securesum import MIN_SITES, next_prime

PARTITION_SCHEMES = ("round_robin", "contiguous")


def parse_transactions(text: str) -> TransactionDB:
    """One transaction per line, whitespace-separated non-negative item ids.

    Blank lines are skipped and repeated items in a line collapse.
    """
    rows = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        fields = line.split()
        if not fields:
            continue
        try:
            items = [int(f) for f in fields]
        except ValueError:
            bad = next(f for f in fields if not f.lstrip("+-").isdigit())
            raise ParseError(lineno, f"item {bad!r} is not an integer") from None
        if any(i < 0 for i in items):
            raise ParseError(lineno, "item ids must be non-negative")
        rows.append(items)
    if not rows:
        raise EmptyDataset("dataset contains no transactions")
    return TransactionDB.from_iterable(rows)


def load_dataset(path: str | os.PathLike) -> TransactionDB:
    with open(path, encoding="utf-8") as fh:
        return parse_transactions(fh.read())


def load_fixture(name: str = "demo.dat") -> TransactionDB:
    """A dataset bundled with the package."""
    return parse_transactions(resources.files("mixmine.data").joinpath(name).read_text(encoding="utf-8"))


def partition(db: TransactionDB, n: int, scheme: str = "round_robin") -> list[TransactionDB]:
    """Split ``db`` into ``n`` disjoint site databases."""
    if n < MIN_SITES:
        raise TooFewSites(f"need at least {MIN_SITES} sites, got {n}")
    txs = db.transactions
    if scheme == "round_robin":
        parts = [txs[i::n] for i in range(n)]
    elif scheme == "contiguous":
        q, r = divmod(len(txs), n)
        bounds = [i * q + min(i, r) for i in range(n + 1)]
        parts = [txs[bounds[i] : bounds[i + 1]] for i in range(n)]
    else:
        raise ValueError(f"unknown partition scheme {scheme!r}; use one of {PARTITION_SCHEMES}")
    return [TransactionDB(tuple(p)) for p in parts]


def derive_modulus(total_transactions: int) -> int:
    """Smallest prime above the transaction count, which bounds every global count."""
    if total_transactions < 1:
        raise ValueError("total_transactions must be at least 1")
    return next_prime(total_transactions)


def sizes(dbs: Sequence[TransactionDB]) -> list[int]:
    return [db.size for db in dbs]
