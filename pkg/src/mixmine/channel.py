"""Authenticated, confidential site-to-mixer channel.

Each site shares one symmetric key with the mixer.  Frames are sealed with
AES-GCM.  The 12-byte nonce is a direction byte followed by an 11-byte
per-direction counter.  A receiver only accepts strictly increasing
counters, so a replayed or reordered frame fails.
"""

from __future__ import annotations

import hashlib
import hmac

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives.ciphers.aead import AESGCM

from .exceptions import ChannelIntegrityError, ReplayError

NONCE_SIZE = 12
TAG_SIZE = 16
OVERHEAD = NONCE_SIZE + TAG_SIZE

TO_MIXER = 1
TO_SITE = 2


def derive_channel_key(master: bytes, site_index: int) -> bytes:
    """Per-site key from an operator-provisioned channel secret (not the mining seed)."""
    return hmac.new(master, b"mixmine-channel" + site_index.to_bytes(2, "big"), hashlib.sha256).digest()[:16]


class SecureChannel:
    """One end of the channel between site ``site_index`` and the mixer."""

    def __init__(self, key: bytes, site_index: int, at_mixer: bool):
        self._aead = AESGCM(key)
        self.site_index = site_index
        self._send_dir = TO_SITE if at_mixer else TO_MIXER
        self._recv_dir = TO_MIXER if at_mixer else TO_SITE
        self._send_counter = 0
        self._last_recv = -1

    def _aad(self, direction: int) -> bytes:
        return bytes([direction]) + self.site_index.to_bytes(2, "big")

    def seal(self, frame: bytes) -> bytes:
        nonce = bytes([self._send_dir]) + self._send_counter.to_bytes(NONCE_SIZE - 1, "big")
        self._send_counter += 1
        return nonce + self._aead.encrypt(nonce, frame, self._aad(self._send_dir))

    def open(self, sealed: bytes) -> bytes:
        if len(sealed) < OVERHEAD:
            raise ChannelIntegrityError("sealed frame too short")
        nonce = sealed[:NONCE_SIZE]
        if nonce[0] != self._recv_dir:
            raise ChannelIntegrityError("frame sealed for the other direction")
        counter = int.from_bytes(nonce[1:], "big")
        if counter <= self._last_recv:
            raise ReplayError(f"frame counter {counter} already seen on site {self.site_index} channel")
        try:
            frame = self._aead.decrypt(nonce, sealed[NONCE_SIZE:], self._aad(self._recv_dir))
        except InvalidTag:
            raise ChannelIntegrityError(f"authentication failed on site {self.site_index} channel") from None
        self._last_recv = counter
        return frame


def channel_pair(key: bytes, site_index: int) -> tuple[SecureChannel, SecureChannel]:
    """``(site_end, mixer_end)`` sharing ``key``."""
    return SecureChannel(key, site_index, at_mixer=False), SecureChannel(key, site_index, at_mixer=True)
