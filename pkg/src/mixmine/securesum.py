"""Additive masking over a prime field.

A site hides its count ``c`` as ``alpha = (c * r + n_i) mod p`` where ``r`` and
the per-site nonces ``n_i`` come from a keystream shared by every site but not
by the mixer.  The mixer adds the alphas as plain integers and the sites
recover ``sum(c) = (eps - sum(n_i)) * r^-1 mod p``.

All values here are immutable and every function is pure.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .exceptions import (
    BitLengthTooSmall,
    CountOutOfRange,
    IncompleteSet,
    ModulusTooSmall,
    NotInvertible,
    NotPrime,
    ParameterError,
    RoundMismatch,
    SiteIndexOutOfRange,
    TooFewSites,
)

MIN_SITES = 3

# Deterministic Miller-Rabin witnesses, correct for n < 3.3e24.
_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    for p in _MR_BASES:
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def next_prime(n: int) -> int:
    """Smallest prime strictly greater than ``n``."""
    candidate = max(n + 1, 2)
    while not is_prime(candidate):
        candidate += 1
    return candidate


@dataclass(frozen=True)
class GroupParams:
    modulus: int
    bit_length: int
    site_count: int

    @property
    def entry_bytes(self) -> int:
        """Wire width of one residue."""
        return (self.bit_length + 7) // 8


@dataclass(frozen=True)
class IterationKeys:
    """Masking material for one masked value slot.

    ``nonces[0]`` belongs to site 1.  ``nonce_sum`` is the exact integer sum,
    never reduced.
    """

    round: int
    r: int
    r_inv: int
    nonces: tuple[int, ...]
    nonce_sum: int

    @classmethod
    def from_values(cls, round: int, r: int, nonces: Sequence[int], modulus: int) -> "IterationKeys":
        nonces = tuple(int(n) for n in nonces)
        return cls(round, r, mod_inverse(r, modulus), nonces, sum(nonces))


@dataclass(frozen=True)
class MaskedValue:
    round: int
    item_index: int
    alpha: int


@dataclass(frozen=True)
class AggregateCiphertext:
    round: int
    item_index: int
    epsilon: int


def validate_params(modulus: int, bit_length: int, site_count: int, count_bound: int) -> GroupParams:
    """Check the group parameters and build a :class:`GroupParams`.

    Args:
        modulus: Candidate prime; every global count must stay below it.
        bit_length: Width in bits of one keystream field.
        site_count: Number of data sites.
        count_bound: Largest possible global count (e.g. total transactions).

    Raises:
        ParameterError: a non-positive argument.
        NotPrime, ModulusTooSmall, BitLengthTooSmall, TooFewSites.
    """
    for name, value in (("modulus", modulus), ("bit_length", bit_length), ("site_count", site_count)):
        if int(value) != value or value <= 0:
            raise ParameterError(f"{name} must be a positive integer, got {value!r}")
    if count_bound < 0:
        raise ParameterError(f"count_bound must be non-negative, got {count_bound!r}")
    if not is_prime(modulus):
        raise NotPrime(f"modulus {modulus} is not prime")
    if modulus <= count_bound:
        raise ModulusTooSmall(f"modulus {modulus} must exceed the count bound {count_bound}")
    if modulus >= 1 << bit_length:
        raise BitLengthTooSmall(f"modulus {modulus} does not fit in {bit_length} bits")
    if site_count < MIN_SITES:
        raise TooFewSites(f"need at least {MIN_SITES} sites, got {site_count}")
    return GroupParams(int(modulus), int(bit_length), int(site_count))


def mod_inverse(r: int, modulus: int) -> int:
    """Inverse of ``r`` modulo ``modulus`` by the extended Euclidean algorithm."""
    if not 0 < r < modulus:
        raise NotInvertible(f"{r} is not a nonzero residue mod {modulus}")
    old_r, cur_r = r, modulus
    old_s, cur_s = 1, 0
    while cur_r:
        q = old_r // cur_r
        old_r, cur_r = cur_r, old_r - q * cur_r
        old_s, cur_s = cur_s, old_s - q * cur_s
    if old_r != 1:
        raise NotInvertible(f"gcd({r}, {modulus}) = {old_r}")
    return old_s % modulus


def mask(count: int, keys: IterationKeys, site_index: int, params: GroupParams, item_index: int = 0) -> MaskedValue:
    """Mask one site's count: ``(count * r + n_site) mod p``.

    ``site_index`` is 1-based.
    """
    if not 0 <= count < params.modulus:
        raise CountOutOfRange(f"count {count} outside [0, {params.modulus})")
    if not 1 <= site_index <= len(keys.nonces):
        raise SiteIndexOutOfRange(f"site index {site_index} outside 1..{len(keys.nonces)}")
    alpha = (count * keys.r + keys.nonces[site_index - 1]) % params.modulus
    return MaskedValue(keys.round, item_index, alpha)


def mix(values: Sequence[MaskedValue], site_count: int | None = None) -> AggregateCiphertext:
    """Sum masked values as plain integers; no modular reduction."""
    if not values:
        raise IncompleteSet("no masked values to mix")
    if site_count is not None and len(values) != site_count:
        raise IncompleteSet(f"expected {site_count} values, got {len(values)}")
    first = values[0]
    for v in values[1:]:
        if (v.round, v.item_index) != (first.round, first.item_index):
            raise RoundMismatch(
                f"cannot mix slot {(v.round, v.item_index)} with {(first.round, first.item_index)}"
            )
    return AggregateCiphertext(first.round, first.item_index, sum(v.alpha for v in values))


def unmask(agg: AggregateCiphertext, keys: IterationKeys, params: GroupParams) -> int:
    """Recover the sum of the masked counts.

    Exact whenever the true sum is below the modulus.
    """
    if agg.round != keys.round:
        raise RoundMismatch(f"aggregate round {agg.round} != key round {keys.round}")
    return (agg.epsilon - keys.nonce_sum) % params.modulus * keys.r_inv % params.modulus
