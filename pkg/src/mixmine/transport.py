"""Message delivery with byte-exact accounting.

Two transports share one endpoint contract (``send``/``recv``/``close``):

* :class:`InProcessBus` keeps one FIFO per (sender, receiver) pair.  It
  never blocks.  A scheduler decides which pair delivers next.
* :class:`TcpMixerEndpoint` / :class:`TcpSiteEndpoint` run over one TCP
  connection per site, framed as ``u32 length | bytes``.

Payload counters see the inner protocol frame plus its 4-byte length
prefix, before channel encryption.  Gross counters see the sealed frame
plus prefix.  Endpoint id 0 is the mixer.
"""

from __future__ import annotations

import copy
import queue
import socket
import struct
import threading
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Mapping

from .channel import SecureChannel
from .exceptions import Closed, IoFailure, Timeout
from .protocol import HEADER_SIZE, MIXER, peek_header

LENGTH_PREFIX = struct.Struct(">I")
PREFIX_SIZE = LENGTH_PREFIX.size
UNFRAMED = -1  # metrics bucket for frames without a protocol header


@dataclass
class RoundMetrics:
    site_to_mixer_bytes: int = 0
    mixer_to_sites_bytes: int = 0
    site_to_mixer_payload: int = 0
    mixer_to_sites_payload: int = 0
    site_to_mixer_header: int = 0
    mixer_to_sites_header: int = 0
    site_to_mixer_messages: int = 0
    mixer_to_sites_messages: int = 0
    site_to_mixer_gross: int = 0
    mixer_to_sites_gross: int = 0

    def add(self, other: "RoundMetrics") -> None:
        for name in self.__dataclass_fields__:
            setattr(self, name, getattr(self, name) + getattr(other, name))


@dataclass
class ChannelMetrics:
    """Per-round byte and message counters.

    ``*_bytes`` include the length prefix.  ``*_payload`` counts only vector
    entries.  ``*_header`` is the 11-byte frame header plus the prefix.
    """

    rounds: dict[int, RoundMetrics] = field(default_factory=dict)

    def round(self, r: int) -> RoundMetrics:
        return self.rounds.get(r, RoundMetrics())

    @property
    def total(self) -> RoundMetrics:
        out = RoundMetrics()
        for m in self.rounds.values():
            out.add(m)
        return out

    def to_dict(self) -> dict:
        return {str(r): vars(m).copy() for r, m in sorted(self.rounds.items())}


class MetricsRecorder:
    """Thread-safe collector shared by the endpoints of one session."""

    def __init__(self, keep_transcript: bool = False):
        self._lock = threading.Lock()
        self._metrics = ChannelMetrics()
        self.transcript: list[tuple[int, int, bytes]] | None = [] if keep_transcript else None

    def record(self, source: int, dest: int, frame: bytes, sealed_len: int) -> None:
        header = peek_header(frame)
        r = header[1] if header is not None else UNFRAMED
        inner = len(frame) + PREFIX_SIZE
        head = HEADER_SIZE + PREFIX_SIZE if header is not None else inner
        prefix = "mixer_to_sites" if source == MIXER else "site_to_mixer"
        with self._lock:
            m = self._metrics.rounds.setdefault(r, RoundMetrics())
            setattr(m, f"{prefix}_bytes", getattr(m, f"{prefix}_bytes") + inner)
            setattr(m, f"{prefix}_payload", getattr(m, f"{prefix}_payload") + inner - head)
            setattr(m, f"{prefix}_header", getattr(m, f"{prefix}_header") + head)
            setattr(m, f"{prefix}_messages", getattr(m, f"{prefix}_messages") + 1)
            setattr(m, f"{prefix}_gross", getattr(m, f"{prefix}_gross") + sealed_len + PREFIX_SIZE)
            if self.transcript is not None:
                self.transcript.append((source, dest, bytes(frame)))

    def snapshot(self) -> ChannelMetrics:
        with self._lock:
            return copy.deepcopy(self._metrics)


def snapshot_metrics(session) -> ChannelMetrics:
    """Point-in-time copy of a recorder's (or anything with ``.recorder``) metrics."""
    recorder = session if isinstance(session, MetricsRecorder) else session.recorder
    return recorder.snapshot()


class _Endpoint:
    def __init__(self, ident: int, recorder: MetricsRecorder | None, channels: Mapping[int, SecureChannel] | None):
        self.ident = ident
        self.recorder = recorder
        self.channels = dict(channels or {})
        self.closed = False

    def _seal(self, dest: int, frame: bytes) -> bytes:
        if self.closed:
            raise Closed(f"endpoint {self.ident} is closed")
        ch = self.channels.get(dest)
        sealed = ch.seal(frame) if ch is not None else frame
        if self.recorder is not None:
            self.recorder.record(self.ident, dest, frame, len(sealed))
        return sealed

    def _open(self, source: int, sealed: bytes) -> bytes:
        ch = self.channels.get(source)
        return ch.open(sealed) if ch is not None else sealed

    def close(self) -> None:
        self.closed = True


# in-process ------------------------------------------------------------------


class InProcessEndpoint(_Endpoint):
    def __init__(self, bus: "InProcessBus", ident: int, recorder, channels):
        super().__init__(ident, recorder, channels)
        self.bus = bus

    def send(self, destination: int, frame: bytes) -> None:
        sealed = self._seal(destination, frame)
        if self.bus.is_closed(destination):
            raise Closed(f"endpoint {destination} is closed")
        self.bus._queues.setdefault((self.ident, destination), deque()).append(sealed)

    def recv(self, source: int | None = None) -> tuple[int, bytes] | None:
        """Next frame, from ``source`` or from the lowest-numbered sender with
        one waiting.  ``None`` means nothing is pending."""
        sources = [source] if source is not None else sorted(
            s for (s, d), q in self.bus._queues.items() if d == self.ident and q
        )
        for s in sources:
            q = self.bus._queues.get((s, self.ident))
            if q:
                return s, self._open(s, q.popleft())
        if self.closed:
            raise Closed(f"endpoint {self.ident} is closed")
        return None


class InProcessBus:
    """Lossless per-pair FIFO delivery inside one process."""

    def __init__(self, site_count: int, recorder: MetricsRecorder | None = None, channel_pairs=None):
        self.recorder = recorder if recorder is not None else MetricsRecorder()
        self._queues: dict[tuple[int, int], deque] = {}
        self.endpoints: dict[int, InProcessEndpoint] = {}
        channel_pairs = channel_pairs or {}
        mixer_channels = {i: pair[1] for i, pair in channel_pairs.items()}
        self.endpoints[MIXER] = InProcessEndpoint(self, MIXER, self.recorder, mixer_channels)
        for i in range(1, site_count + 1):
            chans = {MIXER: channel_pairs[i][0]} if i in channel_pairs else {}
            self.endpoints[i] = InProcessEndpoint(self, i, self.recorder, chans)

    def endpoint(self, ident: int) -> InProcessEndpoint:
        return self.endpoints[ident]

    def is_closed(self, ident: int) -> bool:
        return self.endpoints[ident].closed

    def pending(self) -> list[tuple[int, int]]:
        """(source, destination) pairs with undelivered frames, sorted."""
        return sorted(pair for pair, q in self._queues.items() if q)


# TCP -------------------------------------------------------------------------


def _send_framed(sock: socket.socket, data: bytes) -> None:
    try:
        sock.sendall(LENGTH_PREFIX.pack(len(data)) + data)
    except OSError as exc:
        raise IoFailure(str(exc)) from exc


def _recv_exact(sock: socket.socket, n: int) -> bytes:
    buf = bytearray()
    while len(buf) < n:
        try:
            chunk = sock.recv(n - len(buf))
        except socket.timeout:
            raise Timeout("socket receive timed out") from None
        except OSError as exc:
            raise IoFailure(str(exc)) from exc
        if not chunk:
            raise Closed("peer closed the connection")
        buf += chunk
    return bytes(buf)


def _recv_framed(sock: socket.socket) -> bytes:
    (length,) = LENGTH_PREFIX.unpack(_recv_exact(sock, PREFIX_SIZE))
    return _recv_exact(sock, length)


def parse_address(text: str) -> tuple[str, int]:
    host, _, port = text.rpartition(":")
    return host or "127.0.0.1", int(port)


class TcpSiteEndpoint(_Endpoint):
    """A site's connection to the mixer.  Sends a 2-byte hello with its index."""

    def __init__(self, site_index: int, address: tuple[str, int], recorder=None, channel=None, timeout: float = 30.0):
        super().__init__(site_index, recorder, {MIXER: channel} if channel is not None else None)
        deadline = time.monotonic() + timeout
        while True:
            try:
                self.sock = socket.create_connection(address, timeout=timeout)
                break
            except ConnectionRefusedError as exc:  # mixer may still be starting
                if time.monotonic() >= deadline:
                    raise IoFailure(f"cannot reach mixer at {address}: {exc}") from exc
                time.sleep(0.05)
            except OSError as exc:
                raise IoFailure(f"cannot reach mixer at {address}: {exc}") from exc
        self.sock.settimeout(timeout)
        _send_framed(self.sock, site_index.to_bytes(2, "big"))

    def send(self, destination: int, frame: bytes) -> None:
        if destination != MIXER:
            raise ValueError("sites only talk to the mixer")
        _send_framed(self.sock, self._seal(destination, frame))

    def recv(self, timeout: float | None = None) -> tuple[int, bytes]:
        if self.closed:
            raise Closed(f"endpoint {self.ident} is closed")
        if timeout is not None:
            self.sock.settimeout(timeout)
        return MIXER, self._open(MIXER, _recv_framed(self.sock))

    def close(self) -> None:
        super().close()
        self.sock.close()


class TcpMixerEndpoint(_Endpoint):
    """Listening side.  One reader thread per site feeds a single inbox."""

    def __init__(
        self,
        address: tuple[str, int],
        site_count: int,
        recorder=None,
        channels=None,
        record_received: bool = False,
    ):
        super().__init__(MIXER, recorder, channels)
        self.site_count = site_count
        self.record_received = record_received
        self.listener = socket.create_server(address)
        self.address = self.listener.getsockname()[:2]
        self.conns: dict[int, socket.socket] = {}
        self._inbox: queue.Queue = queue.Queue()
        self._finished: set[int] = set()

    def mark_finished(self, site: int) -> None:
        """``site`` said goodbye; its hang-up is no longer an error."""
        self._finished.add(site)

    def accept_all(self, timeout: float = 30.0) -> None:
        self.listener.settimeout(timeout)
        while len(self.conns) < self.site_count:
            try:
                conn, _ = self.listener.accept()
            except socket.timeout:
                raise Timeout(f"only {len(self.conns)} of {self.site_count} sites connected") from None
            conn.settimeout(timeout)
            site = int.from_bytes(_recv_framed(conn), "big")
            if site in self.conns or not 1 <= site <= self.site_count:
                conn.close()
                raise IoFailure(f"bad or duplicate hello from site {site}")
            conn.settimeout(None)
            self.conns[site] = conn
            threading.Thread(target=self._reader, args=(site, conn), daemon=True).start()

    def _reader(self, site: int, conn: socket.socket) -> None:
        while True:
            try:
                data = _recv_framed(conn)
            except Exception as exc:  # hand the failure to whoever calls recv
                self._inbox.put((site, exc))
                return
            self._inbox.put((site, data))

    def send(self, destination: int, frame: bytes) -> None:
        conn = self.conns.get(destination)
        if conn is None:
            raise Closed(f"no connection to site {destination}")
        _send_framed(conn, self._seal(destination, frame))

    def recv(self, timeout: float | None = None) -> tuple[int, bytes]:
        if self.closed:
            raise Closed("mixer endpoint is closed")
        while True:
            try:
                site, data = self._inbox.get(timeout=timeout)
            except queue.Empty:
                raise Timeout("no message from any site before the deadline") from None
            if not (isinstance(data, Closed) and site in self._finished):
                break
        if isinstance(data, Exception):
            raise data if isinstance(data, (Closed, IoFailure)) else IoFailure(str(data))
        frame = self._open(site, data)
        if self.record_received and self.recorder is not None:
            self.recorder.record(site, MIXER, frame, len(data))
        return site, frame

    def close(self) -> None:
        super().close()
        for conn in self.conns.values():
            conn.close()
        self.listener.close()
