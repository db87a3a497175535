from __future__ import annotations

import random

import pytest

from mixmine.keystream import Seed
from mixmine.mining import TransactionDB


def trial_division_is_prime(n: int) -> bool:
    if n < 2:
        return False
    d = 2
    while d * d <= n:
        if n % d == 0:
            return False
        d += 1
    return True


def random_db(rng: random.Random, n_tx: int, n_items: int, density: float = 0.35) -> TransactionDB:
    return TransactionDB.from_iterable(
        [[i for i in range(n_items) if rng.random() < density] for _ in range(n_tx)]
    )


@pytest.fixture
def seed() -> Seed:
    return Seed.from_hex("00112233445566778899")


@pytest.fixture
def rng() -> random.Random:
    return random.Random(12345)
