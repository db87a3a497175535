"""Shared keystream and per-slot key derivation.

Every site runs an identical generator keyed by the shared seed, so all of
them derive the same ``r`` and nonces without talking to each other.  The
reference generator is AES in output feedback mode encrypting a repeated
constant (by default the encoded modulus).

The stream is cut into chunks of ``l * (1 + N)`` bits, most significant bit
first::

    | r (l bits) | n_1 (l bits) | n_2 (l bits) | ... | n_N (l bits) |

Each raw field is reduced mod ``p``.  A chunk whose ``r`` reduces to zero is
thrown away and the next chunk is used.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes

from .exceptions import BadSeedLength, KeyOrderError, ParameterError
from .securesum import GroupParams, IterationKeys, mod_inverse

DEFAULT_SEED_BYTES = 10  # 80-bit seed
GENERATOR_ID = "aes128-ofb/sha256-key/v1"

_BLOCK = 16


@dataclass(frozen=True)
class Seed:
    """Shared secret seed.  ``repr`` never shows the key material."""

    value: bytes
    size: int = DEFAULT_SEED_BYTES

    def __post_init__(self):
        if not isinstance(self.value, (bytes, bytearray)):
            raise BadSeedLength("seed must be bytes")
        if len(self.value) != self.size:
            raise BadSeedLength(f"seed is {len(self.value)} bytes, expected {self.size}")
        object.__setattr__(self, "value", bytes(self.value))

    @classmethod
    def from_hex(cls, text: str, size: int = DEFAULT_SEED_BYTES) -> "Seed":
        text = text.strip().lower().removeprefix("0x")
        if len(text) != 2 * size:
            raise BadSeedLength(f"seed hex must be {2 * size} characters, got {len(text)}")
        try:
            raw = bytes.fromhex(text)
        except ValueError as exc:
            raise BadSeedLength(f"seed is not valid hex: {exc}") from None
        return cls(raw, size)

    def __repr__(self) -> str:
        return f"Seed(<{8 * self.size} bits>)"


@dataclass(frozen=True)
class KeyScheduleConfig:
    bit_length: int
    site_count: int

    def __post_init__(self):
        if self.bit_length <= 0 or self.site_count <= 0:
            raise ParameterError("bit_length and site_count must be positive")

    @property
    def chunk_bits(self) -> int:
        return self.bit_length * (1 + self.site_count)

    @classmethod
    def from_params(cls, params: GroupParams) -> "KeyScheduleConfig":
        return cls(params.bit_length, params.site_count)


def encode_constant(value: int) -> bytes:
    """Big-endian minimal encoding, used to turn the modulus into a plaintext."""
    return value.to_bytes(max(1, (value.bit_length() + 7) // 8), "big")


def aes_key_from_seed(seed: Seed) -> bytes:
    # AES wants 128 bits; the seed is 80.  Stretch it with SHA-256.
    return hashlib.sha256(b"mixmine-seed\x00" + seed.value).digest()[:16]


class StreamGenerator:
    """Deterministic bit stream from a seed and a constant plaintext.

    Output byte ``i`` is ``constant[i % len(constant)] XOR O[i]``, where ``O`` is
    the OFB output ``O_0 = AES(IV)``, ``O_k = AES(O_{k-1})`` with a zero IV.
    Bits are consumed MSB first and never re-read.

    Not safe for concurrent use.
    """

    def __init__(self, seed: Seed, constant: bytes):
        if not constant:
            raise ParameterError("constant plaintext must be non-empty")
        self._encryptor = Cipher(algorithms.AES(aes_key_from_seed(seed)), modes.ECB()).encryptor()
        self._constant = bytes(constant)
        self._register = bytes(_BLOCK)
        self._pending = bytearray()  # OFB output not yet used
        self._offset = 0  # bytes produced so far
        self._buffer = 0  # pending bits, MSB first
        self._buffered = 0
        self.bits_consumed = 0
        self._next_round = 0

    def read_bytes(self, n: int) -> bytes:
        """Next ``n`` raw stream bytes (byte-aligned callers only)."""
        if self._buffered % 8:
            raise ParameterError("stream is not byte aligned")
        out = bytearray()
        while self._buffered and len(out) < n:
            self._buffered -= 8
            out.append((self._buffer >> self._buffered) & 0xFF)
            self._buffer &= (1 << self._buffered) - 1
        if len(out) < n:
            out += self._produce(n - len(out))
        self.bits_consumed += 8 * n
        return bytes(out)

    def read_bits(self, nbits: int) -> int:
        """Next ``nbits`` bits as an unsigned integer."""
        while self._buffered < nbits:
            need = (nbits - self._buffered + 7) // 8
            self._buffer = (self._buffer << (8 * need)) | int.from_bytes(self._produce(need), "big")
            self._buffered += 8 * need
        self._buffered -= nbits
        value = self._buffer >> self._buffered
        self._buffer &= (1 << self._buffered) - 1
        self.bits_consumed += nbits
        return value

    def _produce(self, n: int) -> bytes:
        while len(self._pending) < n:
            self._register = self._encryptor.update(self._register)
            self._pending += self._register
        out = self._pending[:n]
        del self._pending[:n]
        c, start = self._constant, self._offset
        for i in range(n):
            out[i] ^= c[(start + i) % len(c)]
        self._offset += n
        return bytes(out)

    @property
    def next_round(self) -> int:
        """Slot number the next :func:`derive_iteration_keys` call must use."""
        return self._next_round



def init_generator(seed: Seed, constant: bytes) -> StreamGenerator:
    return StreamGenerator(seed, constant)


def next_chunk(gen: StreamGenerator, config: KeyScheduleConfig) -> int:
    """Consume one ``l * (1 + N)``-bit chunk and return it as an integer."""
    return gen.read_bits(config.chunk_bits)


def split_chunk(chunk: int, config: KeyScheduleConfig) -> tuple[int, list[int]]:
    """Slice a chunk into its raw ``r`` field and ``N`` raw nonce fields."""
    l, n = config.bit_length, config.site_count
    field_mask = (1 << l) - 1
    fields = [(chunk >> (l * (n - i))) & field_mask for i in range(n + 1)]
    return fields[0], fields[1:]


def keys_from_chunk(chunk: int, round: int, config: KeyScheduleConfig, params: GroupParams) -> IterationKeys | None:
    """Build keys from one chunk, or ``None`` when ``r`` reduces to zero."""
    raw_r, raw_nonces = split_chunk(chunk, config)
    r = raw_r % params.modulus
    if r == 0:
        return None
    nonces = tuple(n % params.modulus for n in raw_nonces)
    return IterationKeys(round, r, mod_inverse(r, params.modulus), nonces, sum(nonces))


def derive_iteration_keys(
    gen: StreamGenerator, round: int, config: KeyScheduleConfig, params: GroupParams
) -> IterationKeys:
    """Keys for slot ``round``.

    Slots come off the stream in order.  Asking for a later slot skips the
    ones in between; asking for an earlier one is an error.
    """
    if round < gen.next_round:
        raise KeyOrderError(f"slot {round} already consumed (next is {gen.next_round})")
    while True:
        slot = gen.next_round
        keys = None
        while keys is None:
            keys = keys_from_chunk(next_chunk(gen, config), slot, config, params)
        gen._next_round = slot + 1
        if slot == round:
            return keys


class KeySchedule:
    """Convenience wrapper: a generator bound to one set of group parameters."""

    def __init__(self, seed: Seed, params: GroupParams, constant: bytes | None = None):
        self.params = params
        self.config = KeyScheduleConfig.from_params(params)
        self.constant = encode_constant(params.modulus) if constant is None else constant
        self.generator = init_generator(seed, self.constant)

    def next(self) -> IterationKeys:
        return derive_iteration_keys(self.generator, self.generator.next_round, self.config, self.params)

    def take(self, count: int) -> list[IterationKeys]:
        return [self.next() for _ in range(count)]
