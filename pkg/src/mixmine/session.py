"""Running a whole mining session.

``run_session`` wires N site state machines and one mixer together over a
transport and drives them until everyone has terminated.

* ``inproc``: a single-threaded event loop over :class:`InProcessBus`.  A
  seeded RNG picks which pending (sender, receiver) pair delivers next, so
  arrival order across sites varies while the transcript stays reproducible.
* ``tcp``: the mixer and each site run in their own thread over loopback
  sockets, using the same blocking drivers the CLI uses for separate
  processes.
"""

from __future__ import annotations

import logging
import os
import random
import threading
from dataclasses import dataclass, field
from typing import Sequence

from .channel import channel_pair, derive_channel_key
from .exceptions import MixMineError, ModulusTooSmall, ProtocolError, Timeout, TooFewSites
from .mining import FrequentSet, Rule, TransactionDB
from .mixer import MixerState, mixer_round, mixer_terminate
from .protocol import (
    MIXER,
    BroadcastAggregate,
    Phase,
    RoundSummary,
    SessionConfig,
    SiteState,
    Terminate,
    UploadMasked,
    decode_message,
    encode_message,
    frequent_snapshot,
    new_site,
    site_receive,
    site_round,
    termination_message,
)
from .securesum import MIN_SITES
from .transport import (
    ChannelMetrics,
    InProcessBus,
    MetricsRecorder,
    TcpMixerEndpoint,
    TcpSiteEndpoint,
)

log = logging.getLogger(__name__)

DEFAULT_TIMEOUT = 30.0


@dataclass
class MiningResult:
    """Outcome seen by the sites.  Equality ignores metrics and transcript."""

    frequents: list[FrequentSet]
    rules: list[Rule]
    total_size: int
    rounds: list[RoundSummary]
    metrics: ChannelMetrics = field(default_factory=ChannelMetrics, compare=False, repr=False)
    transcript: list | None = field(default=None, compare=False, repr=False)

    def frequent_dict(self) -> dict[tuple[int, ...], int]:
        return {s: n for fs in self.frequents for s, n in fs.entries}


def _result_from_site(site: SiteState) -> MiningResult:
    return MiningResult(list(site.frequents), list(site.rules or []), site.total_size or 0, list(site.history))


def _check_agreement(sites: Sequence[SiteState]) -> None:
    first = sites[0]
    for s in sites[1:]:
        if frequent_snapshot(s.frequents) != frequent_snapshot(first.frequents) or s.history != first.history:
            raise ProtocolError(f"site {s.site_index} disagrees with site {first.site_index}")


def _check_setup(config: SessionConfig, dbs: Sequence[TransactionDB]) -> None:
    if len(dbs) < MIN_SITES:
        raise TooFewSites(f"need at least {MIN_SITES} sites, got {len(dbs)}")
    if len(dbs) != config.site_count:
        raise ValueError(f"{len(dbs)} databases for {config.site_count} configured sites")
    total = sum(db.size for db in dbs)
    if config.params.modulus <= total:
        raise ModulusTooSmall(f"modulus {config.params.modulus} must exceed the {total} total transactions")


def make_channel_pairs(site_count: int, channel_secret: bytes | None):
    """Per-site secure channels, or none when ``channel_secret`` is ``None``."""
    if channel_secret is None:
        return {}
    return {i: channel_pair(derive_channel_key(channel_secret, i), i) for i in range(1, site_count + 1)}


def run_session(
    config: SessionConfig,
    dbs: Sequence[TransactionDB],
    transport: str = "inproc",
    *,
    scheduler_seed: int = 0,
    channel_secret: bytes | None = b"",
    timeout: float = DEFAULT_TIMEOUT,
    keep_transcript: bool = False,
    silent_sites: Sequence[int] = (),
) -> MiningResult:
    """Mine ``dbs`` (one partition per site) and return the agreed result.

    Args:
        config: Session parameters with the shared seed.
        dbs: One database per site, site 1 first.
        transport: ``"inproc"`` or ``"tcp"`` (loopback).
        scheduler_seed: Delivery-order seed for ``inproc``.
        channel_secret: Secret the per-site channel keys come from.  An empty
            value draws a random one; ``None`` disables channel encryption.
        timeout: Deadline for a silent participant.
        keep_transcript: Keep every inner frame in ``result.transcript``.
        silent_sites: Sites that never send anything (failure injection).

    Raises:
        TooFewSites, ModulusTooSmall: bad setup.
        Timeout: a participant never answered.
    """
    _check_setup(config, dbs)
    if channel_secret == b"":
        channel_secret = os.urandom(32)
    recorder = MetricsRecorder(keep_transcript=keep_transcript)
    pairs = make_channel_pairs(config.site_count, channel_secret)
    if transport == "inproc":
        sites = _run_inproc(config, dbs, recorder, pairs, scheduler_seed, set(silent_sites))
    elif transport == "tcp":
        sites = _run_tcp_loopback(config, dbs, recorder, pairs, timeout, set(silent_sites))
    else:
        raise ValueError(f"unknown transport {transport!r}")
    _check_agreement(sites)
    result = _result_from_site(sites[0])
    result.metrics = recorder.snapshot()
    result.transcript = recorder.transcript
    return result


# in-process ------------------------------------------------------------------


def _run_inproc(config, dbs, recorder, pairs, scheduler_seed, silent) -> list[SiteState]:
    n = config.site_count
    bus = InProcessBus(n, recorder, pairs)
    entry = config.params.entry_bytes
    sites = [new_site(i, db, config) for i, db in enumerate(dbs, start=1)]
    mixer = MixerState(expected=n)
    rng = random.Random(scheduler_seed)

    def site_step(site: SiteState) -> None:
        if site.site_index in silent:
            return
        _, msg = site_round(site)
        bus.endpoint(site.site_index).send(MIXER, encode_message(msg, entry))

    order = list(sites)
    rng.shuffle(order)
    for site in order:
        site_step(site)

    while True:
        pending = bus.pending()
        if not pending:
            break
        src, dst = pending[rng.randrange(len(pending))]
        _, frame = bus.endpoint(dst).recv(source=src)
        msg = decode_message(frame, entry)
        if dst == MIXER:
            if isinstance(msg, Terminate):
                mixer_terminate(mixer, msg)
                continue
            _, out = mixer_round(mixer, msg)
            if out is not None:
                data = encode_message(out, entry)
                targets = list(range(1, n + 1))
                rng.shuffle(targets)
                for i in targets:
                    bus.endpoint(MIXER).send(i, data)
        else:
            site = sites[dst - 1]
            site_receive(site, msg)
            if site.phase is Phase.TERMINATED:
                bus.endpoint(dst).send(MIXER, encode_message(termination_message(site), entry))
            else:
                site_step(site)

    if not mixer.done or any(s.phase is not Phase.TERMINATED for s in sites):
        stuck = sorted(set(range(1, n + 1)) - mixer.terminated)
        raise Timeout(f"session stalled in round {mixer.round}; no termination from sites {stuck}")
    return sites


# blocking drivers (TCP) ------------------------------------------------------------


def drive_mixer(endpoint, site_count: int, entry_bytes: int, timeout: float = DEFAULT_TIMEOUT) -> MixerState:
    """Serve uploads until every site has sent ``Terminate``."""
    state = MixerState(expected=site_count)
    while not state.done:
        src, frame = endpoint.recv(timeout=timeout)
        msg = decode_message(frame, entry_bytes)
        if msg.site_index != src:
            raise ProtocolError(f"frame claims site {msg.site_index} but arrived from site {src}")
        if isinstance(msg, Terminate):
            mixer_terminate(state, msg)
            endpoint.mark_finished(src)
        elif isinstance(msg, UploadMasked):
            _, out = mixer_round(state, msg)
            if out is not None:
                data = encode_message(out, entry_bytes)
                for i in range(1, site_count + 1):
                    endpoint.send(i, data)
        else:
            raise ProtocolError(f"mixer cannot handle {type(msg).__name__}")
    log.debug("mixer finished after round %s", state.finished_round)
    return state


def drive_site(endpoint, site: SiteState, timeout: float = DEFAULT_TIMEOUT) -> SiteState:
    """Run one site to termination over a blocking endpoint."""
    entry = site.config.params.entry_bytes
    while True:
        _, msg = site_round(site)
        endpoint.send(MIXER, encode_message(msg, entry))
        if isinstance(msg, Terminate):
            return site
        _, frame = endpoint.recv(timeout=timeout)
        reply = decode_message(frame, entry)
        if not isinstance(reply, BroadcastAggregate):
            raise ProtocolError(f"site {site.site_index} expected a broadcast, got {type(reply).__name__}")
        site_receive(site, reply)
        if site.phase is Phase.TERMINATED:
            endpoint.send(MIXER, encode_message(termination_message(site), entry))
            return site


def _run_tcp_loopback(config, dbs, recorder, pairs, timeout, silent) -> list[SiteState]:
    n = config.site_count
    entry = config.params.entry_bytes
    mixer_ep = TcpMixerEndpoint(("127.0.0.1", 0), n, recorder, {i: p[1] for i, p in pairs.items()})
    errors: list[BaseException] = []
    sites = [new_site(i, db, config) for i, db in enumerate(dbs, start=1)]
    site_eps = []

    def run_site(site: SiteState) -> None:
        try:
            ep = TcpSiteEndpoint(
                site.site_index, mixer_ep.address, recorder, pairs.get(site.site_index, (None,))[0], timeout
            )
            site_eps.append(ep)
            if site.site_index in silent:
                return
            drive_site(ep, site, timeout)
        except BaseException as exc:  # surfaced after join
            errors.append(exc)

    threads = [threading.Thread(target=run_site, args=(s,), daemon=True) for s in sites]
    try:
        for t in threads:
            t.start()
        mixer_ep.accept_all(timeout)
        drive_mixer(mixer_ep, n, entry, timeout)
        for t in threads:
            t.join(timeout)
    except MixMineError as exc:
        errors.insert(0, exc)
    finally:
        mixer_ep.close()
        for ep in site_eps:
            ep.close()
    if errors:
        raise errors[0]
    return sites
