"""The semi-trusted mixer.

The mixer sees only masked vectors.  It adds them slot by slot and sends
the sums back.  Nothing in this module can unmask: it never imports the
key schedule or :func:`~mixmine.securesum.unmask`, and :class:`MixerState`
has no field that could hold a seed, keys or a plaintext count.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .exceptions import DuplicateUpload, LengthMismatch, ProtocolError, StaleRound
from .protocol import BroadcastAggregate, Terminate, UploadMasked
from .securesum import MaskedValue, mix


@dataclass
class MixerState:
    expected: int
    round: int = 0
    pending: dict[tuple[int, int], list[MaskedValue]] = field(default_factory=dict)
    received: set[int] = field(default_factory=set)
    vector_length: int | None = None
    terminated: set[int] = field(default_factory=set)
    finished_round: int | None = None

    @property
    def done(self) -> bool:
        return len(self.terminated) == self.expected


def mixer_round(state: MixerState, msg: UploadMasked) -> tuple[MixerState, BroadcastAggregate | None]:
    """Store one upload; once every site has sent, return the per-slot sums.

    Raises:
        StaleRound: upload for a round that is already closed.
        DuplicateUpload: second upload from the same site in a round.
        LengthMismatch: vectors of different length within a round.
    """
    if not 1 <= msg.site_index <= state.expected:
        raise ProtocolError(f"upload from unknown site {msg.site_index}")
    if msg.site_index in state.terminated:
        raise ProtocolError(f"site {msg.site_index} uploaded after terminating")
    if msg.round < state.round:
        raise StaleRound(f"upload for round {msg.round}, mixer is in round {state.round}")
    if msg.round > state.round:
        if state.received:
            raise ProtocolError(f"upload for round {msg.round} while round {state.round} is still open")
        state.round = msg.round
    if msg.site_index in state.received:
        raise DuplicateUpload(f"site {msg.site_index} already uploaded for round {msg.round}")
    if state.vector_length is None:
        state.vector_length = len(msg.alphas)
    elif len(msg.alphas) != state.vector_length:
        raise LengthMismatch(f"site {msg.site_index} sent {len(msg.alphas)} values, expected {state.vector_length}")

    state.received.add(msg.site_index)
    for j, alpha in enumerate(msg.alphas):
        state.pending.setdefault((msg.round, j), []).append(MaskedValue(msg.round, j, alpha))

    if len(state.received) < state.expected:
        return state, None

    epsilons = tuple(
        mix(state.pending[(state.round, j)], state.expected).epsilon for j in range(state.vector_length)
    )
    out = BroadcastAggregate(state.round, epsilons)
    state.pending.clear()
    state.received.clear()
    state.vector_length = None
    state.round += 1
    return state, out


def mixer_terminate(state: MixerState, msg: Terminate) -> MixerState:
    """Record that a site has finished.  Every site must stop in the same round."""
    if msg.site_index in state.terminated or not 1 <= msg.site_index <= state.expected:
        raise ProtocolError(f"unexpected terminate from site {msg.site_index}")
    if state.received:
        raise ProtocolError(f"site {msg.site_index} terminated while round {state.round} is open")
    if state.finished_round is None:
        state.finished_round = msg.round
    elif msg.round != state.finished_round:
        raise ProtocolError(
            f"site {msg.site_index} terminated in round {msg.round}, others in {state.finished_round}"
        )
    state.terminated.add(msg.site_index)
    return state
