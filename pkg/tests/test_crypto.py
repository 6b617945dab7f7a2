"""Keystream involution, determinism, uniformity, and framing."""

import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from semstego.bits import BitStream, MaskedBitStream
from semstego.crypto import (
    StegoKey,
    derandomize,
    extend_keystream,
    frame_payload,
    keystream_bits,
    padded_random_stream,
    randomize,
    sentence_mask,
    unframe_payload,
)
from semstego.errors import TruncatedMessageError

KEY = StegoKey(key=bytes(range(32)), nonce=b"nonce_01")


# -- BitStream basics ------------------------------------------------------


def test_bitstream_cursor_and_peek():
    bs = BitStream.from_string("10110")
    assert bs.peek(3) == [1, 0, 1]
    assert bs.cursor == 0
    assert bs.read(2) == [1, 0]
    assert bs.cursor == 2
    bs.consume(1)
    assert bs.remaining == 2
    assert len(bs) == 5


def test_bitstream_zero_extension_past_end():
    bs = BitStream.from_string("11")
    assert bs.bit_at(10) == 0
    assert len(bs) == 2  # explicit length unchanged


def test_bitstream_filler():
    bs = BitStream([1, 0], filler=lambda off, n: [1] * n)
    assert bs.bit_at(5) == 1
    assert bs.bits() == [1, 0]


def test_bitstream_bytes_round_trip():
    data = bytes([0x5A, 0xFF, 0x00, 0x81])
    assert BitStream.from_bytes(data).to_bytes() == data
    with pytest.raises(ValueError):
        BitStream([1, 0, 1]).to_bytes()


def test_bitstream_rejects_non_bits():
    with pytest.raises(ValueError):
        BitStream([0, 2, 1])


def test_masked_stream_xors_relative_to_origin():
    base = BitStream.from_string("0000_0000".replace("_", ""))
    base.consume(3)
    view = MaskedBitStream(base, lambda i: i % 2)  # mask 0101...
    assert [view.bit_at(3 + i) for i in range(4)] == [0, 1, 0, 1]
    view.consume(2)
    assert base.cursor == 5


# -- keystream -------------------------------------------------------------


@given(st.binary(min_size=0, max_size=64), st.integers(0, 3))
@settings(max_examples=50)
def test_randomize_involution(data, keyvar):
    key = StegoKey(key=bytes([keyvar]) * 16, nonce=b"12345678")
    stream = BitStream.from_bytes(data)
    assert randomize(randomize(stream, key), key) == stream
    assert derandomize(randomize(stream, key), key) == stream


def test_randomize_zeros_yields_keystream():
    zeros = BitStream([0] * 128)
    out = randomize(zeros, KEY)
    assert out.bits() == keystream_bits(KEY, 0, 0, 128)


def test_distinct_nonces_distinct_keystreams():
    """128-bit keystream prefixes over 1000 nonce pairs never collide."""
    seen = set()
    for i in range(1000):
        key = KEY.with_nonce(i.to_bytes(8, "big"))
        seen.add(tuple(keystream_bits(key, 0, 0, 128)))
    assert len(seen) == 1000


def test_extend_keystream_contract():
    assert len(extend_keystream(KEY, 0)) == 0
    a = extend_keystream(KEY, 777)
    b = extend_keystream(KEY, 777)
    assert a == b
    # continuation is offset-consistent
    c = extend_keystream(KEY, 100, start=677)
    assert a.bits()[677:] == c.bits()


def test_keystream_offset_slicing():
    full = keystream_bits(KEY, 5, 0, 300)
    assert keystream_bits(KEY, 5, 123, 50) == full[123:173]


def test_sentence_masks_differ_by_index():
    m0, m1 = sentence_mask(KEY, 0), sentence_mask(KEY, 1)
    bits0 = [m0(i) for i in range(64)]
    bits1 = [m1(i) for i in range(64)]
    assert bits0 != bits1
    assert bits0 == [sentence_mask(KEY, 0)(i) for i in range(64)]


def test_keystream_uniformity_chi_square():
    """Monobit chi-square on 1e6 bits at alpha=0.01."""
    raw = np.frombuffer(
        bytes(bytearray(b for b in _keystream_bytes_fast(10 ** 6 // 8))), dtype=np.uint8
    )
    bits = np.unpackbits(raw)
    ones = int(bits.sum())
    n = bits.size
    chi2 = (2 * ones - n) ** 2 / n
    assert chi2 < stats.chi2.ppf(0.99, df=1)


def _keystream_bytes_fast(nbytes):
    from semstego.crypto import keystream_bytes

    return keystream_bytes(KEY, 0, 0, nbytes)


def test_keystream_runs_test():
    """Wald-Wolfowitz runs z-statistic within the 99% band on 1e6 bits."""
    raw = np.frombuffer(_keystream_bytes_fast(10 ** 6 // 8), dtype=np.uint8)
    bits = np.unpackbits(raw)
    n = bits.size
    pi = bits.mean()
    runs = 1 + int(np.count_nonzero(bits[1:] != bits[:-1]))
    expected = 2 * n * pi * (1 - pi) + 1
    var = 2 * n * pi * (1 - pi) * (2 * n * pi * (1 - pi) - 1) / (n - 1)
    z = (runs - expected) / var ** 0.5
    assert abs(z) < stats.norm.ppf(0.995)


# -- framing ---------------------------------------------------------------


@given(st.binary(min_size=0, max_size=200))
@settings(max_examples=60)
def test_frame_round_trip(data):
    assert unframe_payload(frame_payload(data)) == data


def test_frame_header_is_bit_length():
    framed = frame_payload(b"\xff")
    assert framed.bits()[:16] == [0] * 12 + [1, 0, 0, 0]  # 8 big-endian


def test_frame_rejects_oversize():
    with pytest.raises(ValueError, match="exceeds"):
        frame_payload(bytes(8192))


def test_unframe_truncated():
    framed = frame_payload(b"hello world")
    clipped = BitStream(framed.bits()[:40])
    with pytest.raises(TruncatedMessageError, match="declares"):
        unframe_payload(clipped)
    with pytest.raises(TruncatedMessageError, match="header"):
        unframe_payload(BitStream([1] * 10))


def test_unframe_ignores_padding():
    framed = frame_payload(b"xy")
    padded = BitStream(framed.bits() + [1, 0, 1, 1, 0, 0, 1])
    assert unframe_payload(padded) == b"xy"


def test_padded_random_stream_round_trip():
    stream = padded_random_stream(b"secret!", KEY)
    assert len(stream) == 16 + 7 * 8
    # padding continues the same keystream domain
    tail = [stream.bit_at(len(stream) + i) for i in range(32)]
    assert tail == keystream_bits(KEY, 0, len(stream), 32)
    recovered = unframe_payload(derandomize(BitStream(stream.bits()), KEY))
    assert recovered == b"secret!"


# -- key handling ----------------------------------------------------------


def test_key_validation():
    with pytest.raises(ValueError, match="16 bytes"):
        StegoKey(key=b"short", nonce=b"12345678")
    with pytest.raises(ValueError, match="nonce"):
        StegoKey(key=bytes(16), nonce=b"123")


def test_key_repr_redacted():
    key = StegoKey(key=b"\xaa" * 16, nonce=b"12345678")
    assert "aa" not in repr(key)
    assert "12345678" not in repr(key)


def test_key_hex_round_trip():
    key = StegoKey.from_hex("00" * 16, "11" * 8)
    assert key.key == bytes(16)
    assert key.nonce == b"\x11" * 8
