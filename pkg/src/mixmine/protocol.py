"""Wire messages and the data-site state machine.

One mining round ``k`` works like this at every site:

1. build C_k from L_{k-1} (join + prune), identically everywhere;
2. count each candidate in the local database;
3. mask every count with fresh keys from the shared keystream and send the
   whole vector to the mixer in one ``UploadMasked``;
4. receive the mixer's per-candidate sums, unmask them, threshold into L_k.

Round 0 is the empty itemset.  Its support count is the local database size,
so the sites learn the global transaction count through the same secure sum
without anyone revealing a partition size.

Frame layout (all integers big-endian)::

    u8 variant | u32 round | u16 site_index | u32 length | length entries

Alphas are ``ceil(l/8)`` bytes wide, epsilons twice that.
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass, field, replace
from typing import Sequence, Union

from .exceptions import (
    CountOverflow,
    LengthMismatch,
    PhaseError,
    RoundMismatch,
    TooFewSites,
    WireFormatError,
)
from .keystream import KeySchedule, Seed
from .mining import (
    CandidateSet,
    FrequentSet,
    Rule,
    TransactionDB,
    compute_frequent,
    count_supports,
    generate_rules,
    initial_candidates,
    make_itemset,
    next_candidates,
)
from .securesum import MIN_SITES, AggregateCiphertext, GroupParams, IterationKeys, mask, unmask

HEADER = struct.Struct(">BIHI")
HEADER_SIZE = HEADER.size  # 11
MIXER = 0  # endpoint id of the mixer; sites are 1..N


class Variant(enum.IntEnum):
    UPLOAD = 1
    BROADCAST = 2
    TERMINATE = 3


@dataclass(frozen=True)
class UploadMasked:
    round: int
    site_index: int
    alphas: tuple[int, ...]


@dataclass(frozen=True)
class BroadcastAggregate:
    round: int
    epsilons: tuple[int, ...]
    site_index: int = MIXER


@dataclass(frozen=True)
class Terminate:
    round: int
    site_index: int = MIXER


ProtocolMessage = Union[UploadMasked, BroadcastAggregate, Terminate]


def encode_message(msg: ProtocolMessage, entry_bytes: int) -> bytes:
    """Serialize ``msg``.  ``entry_bytes`` is the alpha width, ``ceil(l/8)``."""
    if isinstance(msg, UploadMasked):
        variant, values, width = Variant.UPLOAD, msg.alphas, entry_bytes
    elif isinstance(msg, BroadcastAggregate):
        variant, values, width = Variant.BROADCAST, msg.epsilons, 2 * entry_bytes
    elif isinstance(msg, Terminate):
        variant, values, width = Variant.TERMINATE, (), entry_bytes
    else:
        raise TypeError(f"not a protocol message: {msg!r}")
    try:
        head = HEADER.pack(variant, msg.round, msg.site_index, len(values))
        body = b"".join(int(v).to_bytes(width, "big") for v in values)
    except (struct.error, OverflowError) as exc:
        raise WireFormatError(f"cannot encode {type(msg).__name__}: {exc}") from None
    return head + body


def decode_message(frame: bytes, entry_bytes: int) -> ProtocolMessage:
    if len(frame) < HEADER_SIZE:
        raise WireFormatError(f"frame of {len(frame)} bytes is shorter than the header")
    variant, round_, site_index, length = HEADER.unpack_from(frame)
    try:
        variant = Variant(variant)
    except ValueError:
        raise WireFormatError(f"unknown variant {variant}") from None
    width = 2 * entry_bytes if variant is Variant.BROADCAST else entry_bytes
    body = frame[HEADER_SIZE:]
    if len(body) != length * width:
        raise WireFormatError(f"expected {length * width} body bytes, got {len(body)}")
    values = tuple(int.from_bytes(body[i : i + width], "big") for i in range(0, len(body), width))
    if variant is Variant.UPLOAD:
        return UploadMasked(round_, site_index, values)
    if variant is Variant.BROADCAST:
        return BroadcastAggregate(round_, values, site_index)
    if values:
        raise WireFormatError("terminate frame carries a body")
    return Terminate(round_, site_index)


def peek_header(frame: bytes) -> tuple[int, int, int, int] | None:
    """``(variant, round, site_index, length)`` or ``None`` for a foreign frame."""
    if len(frame) < HEADER_SIZE:
        return None
    return HEADER.unpack_from(frame)


@dataclass(frozen=True)
class SessionConfig:
    """Public session parameters, plus the seed on the site copies."""

    params: GroupParams
    minsup: object
    minconf: object
    item_universe: tuple[int, ...]
    seed: Seed | None = field(default=None, repr=False)
    constant: bytes | None = None

    def __post_init__(self):
        if self.params.site_count < MIN_SITES:
            raise TooFewSites(f"need at least {MIN_SITES} sites, got {self.params.site_count}")
        object.__setattr__(self, "item_universe", make_itemset(self.item_universe))

    @property
    def site_count(self) -> int:
        return self.params.site_count

    def for_mixer(self) -> "SessionConfig":
        return replace(self, seed=None)


class Phase(enum.Enum):
    GENERATE_CANDIDATES = "GenerateCandidates"
    COUNT_LOCAL = "CountLocal"
    AWAIT_AGGREGATE = "AwaitAggregate"
    TERMINATED = "Terminated"


@dataclass(frozen=True)
class RoundSummary:
    round: int
    candidate_count: int
    frequent_count: int


@dataclass
class SiteState:
    site_index: int
    db: TransactionDB
    config: SessionConfig
    keygen: KeySchedule = field(repr=False)
    round: int = -1
    phase: Phase = Phase.GENERATE_CANDIDATES
    current_candidates: CandidateSet | None = None
    current_keys: list[IterationKeys] = field(default_factory=list, repr=False)
    frequents: list[FrequentSet] = field(default_factory=list)
    total_size: int | None = None
    history: list[RoundSummary] = field(default_factory=list)
    rules: list[Rule] | None = None
    terminate_sent: bool = False


def new_site(site_index: int, db: TransactionDB, config: SessionConfig) -> SiteState:
    if config.seed is None:
        raise ValueError("site configuration needs the shared seed")
    if not 1 <= site_index <= config.site_count:
        raise ValueError(f"site index {site_index} outside 1..{config.site_count}")
    return SiteState(site_index, db, config, KeySchedule(config.seed, config.params, config.constant))


def _candidates_for(state: SiteState, k: int) -> CandidateSet:
    if k == 0:
        return CandidateSet(0, ((),))
    if k == 1:
        return initial_candidates(state.config.item_universe)
    if not state.frequents or state.frequents[-1].k != k - 1:
        return CandidateSet(k, ())
    return next_candidates(state.frequents[-1])


def site_round(state: SiteState) -> tuple[SiteState, UploadMasked | Terminate]:
    """Generate, count and mask the next round's candidates.

    Returns ``Terminate`` instead of an upload when there are no candidates.

    Raises:
        PhaseError: not ready to start a round.
        CountOverflow: a local count is not below the modulus.
    """
    if state.phase not in (Phase.GENERATE_CANDIDATES, Phase.COUNT_LOCAL):
        raise PhaseError(f"site {state.site_index} cannot start a round in phase {state.phase.value}")
    params = state.config.params
    state.round += 1
    cands = _candidates_for(state, state.round)
    state.current_candidates = cands
    if not cands.candidates:
        return _terminate(state), Terminate(state.round, state.site_index)

    state.phase = Phase.COUNT_LOCAL
    counts = count_supports(state.db, cands)
    too_big = [c for c in counts if c >= params.modulus]
    if too_big:
        raise CountOverflow(f"local count {too_big[0]} does not fit below modulus {params.modulus}")

    state.current_keys = state.keygen.take(len(counts))
    alphas = tuple(
        mask(c, keys, state.site_index, params, j).alpha
        for j, (c, keys) in enumerate(zip(counts, state.current_keys))
    )
    state.phase = Phase.AWAIT_AGGREGATE
    return state, UploadMasked(state.round, state.site_index, alphas)


def site_receive(state: SiteState, msg: BroadcastAggregate) -> SiteState:
    """Unmask the aggregates of the current round and update L_k."""
    if state.phase is not Phase.AWAIT_AGGREGATE:
        raise PhaseError(f"site {state.site_index} is not awaiting an aggregate")
    if msg.round != state.round:
        raise RoundMismatch(f"broadcast for round {msg.round}, site is in round {state.round}")
    cands = state.current_candidates
    if len(msg.epsilons) != len(cands.candidates):
        raise LengthMismatch(f"{len(msg.epsilons)} aggregates for {len(cands.candidates)} candidates")
    params = state.config.params
    totals = [
        unmask(AggregateCiphertext(keys.round, j, eps), keys, params)
        for j, (eps, keys) in enumerate(zip(msg.epsilons, state.current_keys))
    ]
    state.current_keys = []

    if state.round == 0:
        state.total_size = totals[0]
        state.history.append(RoundSummary(0, 1, 1))
        if state.total_size == 0:
            return _terminate(state)
        state.phase = Phase.GENERATE_CANDIDATES
        return state

    level = compute_frequent(cands, totals, state.total_size, state.config.minsup)
    state.history.append(RoundSummary(state.round, len(cands.candidates), len(level.entries)))
    if not level.entries:
        return _terminate(state)
    state.frequents.append(level)
    state.phase = Phase.GENERATE_CANDIDATES
    return state


def _terminate(state: SiteState) -> SiteState:
    state.phase = Phase.TERMINATED
    if state.total_size:
        state.rules = generate_rules(state.frequents, state.total_size, state.config.minconf)
    else:
        state.rules = []
    return state


def termination_message(state: SiteState) -> Terminate:
    return Terminate(state.round, state.site_index)


def frequent_snapshot(frequents: Sequence[FrequentSet]) -> tuple:
    return tuple((fs.k, fs.entries) for fs in frequents)
