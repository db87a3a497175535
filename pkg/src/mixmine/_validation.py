"""Input checks shared by the estimators and the CLI."""

from __future__ import annotations

import numbers
import os

import numpy as np

from .keystream import Seed
from .mining import TransactionDB, as_fraction


def check_transactions(X) -> TransactionDB:
    """Coerce ``X`` to a :class:`TransactionDB`.

    Accepted inputs:

    * a ``TransactionDB``;
    * anything with a ``shape`` (ndarray, DataFrame, scipy sparse matrix):
      a 2-D indicator matrix, where column ``j`` nonzero means item ``j``;
    * any other iterable of iterables of non-negative ints, one per
      transaction.  A nested list is always read this way, never as a matrix.
    """
    if isinstance(X, TransactionDB):
        return X
    if hasattr(X, "tocsr"):
        X = X.tocsr()
        return TransactionDB(tuple(tuple(X.indices[X.indptr[i] : X.indptr[i + 1]][
            np.asarray(X.data[X.indptr[i] : X.indptr[i + 1]]) != 0
        ].tolist()) for i in range(X.shape[0])))
    if hasattr(X, "shape"):
        arr = np.asarray(X)
        if arr.ndim != 2:
            raise ValueError(f"expected a 2-D indicator matrix, got shape {arr.shape}")
        if arr.dtype.kind not in "biuf":
            raise ValueError(f"indicator matrix must be numeric or boolean, got dtype {arr.dtype}")
        return TransactionDB(tuple(tuple(np.flatnonzero(row).tolist()) for row in arr))
    if isinstance(X, (str, bytes)):
        raise ValueError("expected transactions, got a string")
    rows = []
    for i, t in enumerate(X):
        items = []
        for item in t:
            if isinstance(item, (bool, np.bool_)) or not isinstance(item, numbers.Integral):
                raise ValueError(f"transaction {i}: item {item!r} is not an integer id")
            if item < 0:
                raise ValueError(f"transaction {i}: item ids must be non-negative")
            items.append(int(item))
        rows.append(items)
    return TransactionDB.from_iterable(rows)


def check_fraction(name: str, value, upper: float | None = 1):
    if isinstance(value, bool) or not isinstance(value, (numbers.Real, str)):
        raise ValueError(f"{name} must be a number, got {value!r}")
    frac = as_fraction(value)
    if frac < 0 or (upper is not None and frac > upper):
        raise ValueError(f"{name} must lie in [0, {upper}], got {value!r}")
    return value


def check_seed(seed) -> Seed:
    """Seed from hex text, raw bytes, a :class:`Seed`, or ``None`` for a fresh random one."""
    if seed is None:
        return Seed(os.urandom(10))
    if isinstance(seed, Seed):
        return seed
    if isinstance(seed, (bytes, bytearray)):
        return Seed(bytes(seed))
    if isinstance(seed, str):
        return Seed.from_hex(seed)
    raise ValueError(f"cannot use {type(seed).__name__} as a seed")


def check_groups(groups, n_samples: int) -> tuple[list, list[list[int]]]:
    """Map group labels to row indices per site, labels in sorted order."""
    groups = np.asarray(groups)
    if groups.shape != (n_samples,):
        raise ValueError(f"groups must have shape ({n_samples},), got {groups.shape}")
    labels = sorted(set(groups.tolist()))
    return labels, [np.flatnonzero(groups == lab).tolist() for lab in labels]
