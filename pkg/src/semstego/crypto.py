"""Keyed bitstream whitening: the layer between ciphertext and the sampler.

Secret bits are XORed with a keyed counter-mode keystream so the sampler
only ever sees uniform-looking bits, and the same XOR inverts a recovered
prefix (keystreams invert prefix-wise, unlike block permutations).  Block
``i`` of a stream is ``SHA-256(derived_key || nonce || domain || i)``;
separate domains keep the payload stream, its padding continuation, and
the per-sentence whitening masks non-overlapping.  A hash counter beats a
block cipher here because the codec reads many tiny, randomly-placed
slices (one short mask per sentence) and per-call cipher setup dominates.

Framing: the first 16 bits of the payload stream are a big-endian bit
count of the true message, so the decoder knows where keystream padding
begins.
"""

from __future__ import annotations

import hashlib
import secrets
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

from .bits import BitStream
from .errors import TruncatedMessageError

MIN_KEY_BYTES = 16
NONCE_BYTES = 8
HEADER_BITS = 16
MAX_MESSAGE_BYTES = (1 << HEADER_BITS) // 8 - 1

DOMAIN_PAYLOAD = 0
_DOMAIN_SENTENCE_BASE = 1


@dataclass(frozen=True)
class StegoKey:
    """Session key material: a shared key and a per-message nonce."""

    key: bytes
    nonce: bytes

    def __post_init__(self):
        if len(self.key) < MIN_KEY_BYTES:
            raise ValueError(f"key must be at least {MIN_KEY_BYTES} bytes")
        if len(self.nonce) != NONCE_BYTES:
            raise ValueError(f"nonce must be exactly {NONCE_BYTES} bytes")

    @classmethod
    def generate(cls) -> "StegoKey":
        return cls(key=secrets.token_bytes(32), nonce=secrets.token_bytes(NONCE_BYTES))

    @classmethod
    def from_hex(cls, key_hex: str, nonce_hex: str) -> "StegoKey":
        return cls(key=bytes.fromhex(key_hex), nonce=bytes.fromhex(nonce_hex))

    def with_nonce(self, nonce: bytes) -> "StegoKey":
        return StegoKey(key=self.key, nonce=nonce)

    def __repr__(self) -> str:  # never leak material through logs/repr
        return "StegoKey(<redacted>)"


_BLOCK_BYTES = 32  # one SHA-256 digest per counter value
_BYTE_BITS = tuple(
    tuple((b >> shift) & 1 for shift in range(7, -1, -1)) for b in range(256)
)


@lru_cache(maxsize=64)
def _derived_key(key_bytes: bytes) -> bytes:
    return hashlib.sha256(b"semstego/ks:" + key_bytes).digest()


def keystream_bytes(key: StegoKey, domain: int, start: int, n: int) -> bytes:
    """``n`` keystream bytes at byte offset ``start`` within a domain."""
    if n <= 0:
        return b""
    prefix = _derived_key(key.key) + key.nonce + domain.to_bytes(4, "big")
    first_block, offset = divmod(start, _BLOCK_BYTES)
    nblocks = (offset + n + _BLOCK_BYTES - 1) // _BLOCK_BYTES
    raw = b"".join(
        hashlib.sha256(prefix + (first_block + i).to_bytes(8, "big")).digest()
        for i in range(nblocks)
    )
    return raw[offset:offset + n]


def keystream_bits(key: StegoKey, domain: int, start_bit: int, nbits: int) -> list[int]:
    """``nbits`` keystream bits at bit offset ``start_bit`` within a domain."""
    if nbits <= 0:
        return []
    first_byte, bit_off = divmod(start_bit, 8)
    raw = keystream_bytes(key, domain, first_byte, (bit_off + nbits + 7) // 8)
    bits: list[int] = []
    for byte in raw:
        bits.extend(_BYTE_BITS[byte])
    return bits[bit_off:bit_off + nbits]


def extend_keystream(key: StegoKey, needed: int, start: int = 0) -> BitStream:
    """Deterministic keystream continuation used to pad short messages."""
    if needed < 0:
        raise ValueError("needed must be non-negative")
    return BitStream(keystream_bits(key, DOMAIN_PAYLOAD, start, needed))


def randomize(cipher: BitStream, key: StegoKey) -> BitStream:
    """XOR the stream with the payload keystream (an involution)."""
    n = len(cipher)
    mask = keystream_bits(key, DOMAIN_PAYLOAD, 0, n)
    return BitStream(a ^ b for a, b in zip(cipher.bits(), mask))


def derandomize(random_bits: BitStream, key: StegoKey) -> BitStream:
    """Inverse of :func:`randomize`; same XOR with the same keystream."""
    return randomize(random_bits, key)


def sentence_mask(key: StegoKey, index: int) -> Callable[[int], int]:
    """Whitening mask for sentence ``index``, as a lazily-extended bit lookup.

    Each sentence of a message is sampled through its own mask so that a
    sentence which embeds zero bits still changes the next sentence's walk;
    the decoder replays the mask from (key, nonce, index).
    """
    if index < 0:
        raise ValueError("sentence index must be non-negative")
    cache = bytearray()

    def bit(i: int) -> int:
        while i >= len(cache):
            cache.extend(
                keystream_bits(key, _DOMAIN_SENTENCE_BASE + index, len(cache), 256)
            )
        return cache[i]

    return bit


# -- message framing -------------------------------------------------------


def frame_payload(data: bytes) -> BitStream:
    """Prepend the 16-bit big-endian bit-length header."""
    if len(data) > MAX_MESSAGE_BYTES:
        raise ValueError(f"message exceeds {MAX_MESSAGE_BYTES} bytes")
    nbits = len(data) * 8
    header = [(nbits >> shift) & 1 for shift in range(HEADER_BITS - 1, -1, -1)]
    return BitStream(header + BitStream.from_bytes(data).bits())


def unframe_payload(bits: BitStream) -> bytes:
    """Strip the header and return the message bytes.

    Raises TruncatedMessageError when the recovered bits cannot contain
    the length the header declares (or the header itself is implausible).
    """
    raw = bits.bits()
    if len(raw) < HEADER_BITS:
        raise TruncatedMessageError("fewer than 16 recovered bits; header unreadable")
    nbits = 0
    for b in raw[:HEADER_BITS]:
        nbits = (nbits << 1) | b
    if nbits % 8:
        raise TruncatedMessageError(f"header declares {nbits} bits, not a byte multiple")
    if len(raw) < HEADER_BITS + nbits:
        raise TruncatedMessageError(
            f"header declares {nbits} bits but only {len(raw) - HEADER_BITS} recovered"
        )
    return BitStream(raw[HEADER_BITS:HEADER_BITS + nbits]).to_bytes()


def padded_random_stream(data: bytes, key: StegoKey) -> BitStream:
    """Frame + randomize, with keystream padding past the framed length.

    Bit ``i`` is ``framed[i] ^ KS[i]`` while the frame lasts and ``KS[i]``
    beyond it, i.e. one continuous keystream under the padding.  The
    decoder discards everything past the header-declared length.
    """
    framed = frame_payload(data)
    stream = randomize(framed, key)
    declared = len(framed)
    stream.filler = lambda off, n: keystream_bits(key, DOMAIN_PAYLOAD, declared + off, n)
    return stream
