"""Bit streams with a consumed-prefix cursor.

A ``BitStream`` is an ordered sequence of explicit bits plus an optional
filler that fabricates bits past the end on demand (used for keystream
padding).  Reads past the explicit length without a filler see zero bits,
which makes a finite stream behave like its exact dyadic value.  The
consumed prefix is immutable: consumption only moves the cursor forward.
"""

from __future__ import annotations

from typing import Callable, Iterable, Sequence

# filler(offset_in_filler_bits, nbits) -> sequence of 0/1
Filler = Callable[[int, int], Sequence[int]]

_FILL_CHUNK = 256
_BYTE_TABLE = tuple(
    bytes((b >> shift) & 1 for shift in range(7, -1, -1)) for b in range(256)
)


class BitStream:
    """Ordered bits, a cursor, and on-demand extension."""

    __slots__ = ("_buf", "_explicit", "_cursor", "filler")

    def __init__(self, bits: Iterable[int] = (), filler: Filler | None = None):
        self._buf = bytearray(bits)
        if any(b not in (0, 1) for b in self._buf):
            raise ValueError("bits must be 0 or 1")
        self._explicit = len(self._buf)
        self._cursor = 0
        self.filler = filler

    @classmethod
    def from_bytes(cls, data: bytes, filler: Filler | None = None) -> "BitStream":
        """MSB-first bits of ``data``."""
        bits = bytearray()
        for byte in data:
            bits.extend(_BYTE_TABLE[byte])
        return cls(bits, filler=filler)

    @classmethod
    def from_string(cls, text: str) -> "BitStream":
        """Parse a string like ``"0110"``."""
        return cls(int(c) for c in text)

    # -- length / cursor ---------------------------------------------------

    def __len__(self) -> int:
        """Number of explicit bits (filler bits never count)."""
        return self._explicit

    @property
    def cursor(self) -> int:
        return self._cursor

    @property
    def remaining(self) -> int:
        """Explicit bits not yet consumed (never negative)."""
        return max(0, self._explicit - self._cursor)

    # -- reading -----------------------------------------------------------

    def bit_at(self, index: int) -> int:
        """Bit at absolute position, extending via the filler if needed."""
        if index < 0:
            raise IndexError("negative bit index")
        self._ensure(index + 1)
        return self._buf[index]

    def peek(self, n: int) -> list[int]:
        """Next ``n`` bits without consuming them."""
        self._ensure(self._cursor + n)
        return list(self._buf[self._cursor:self._cursor + n])

    def read(self, n: int) -> list[int]:
        out = self.peek(n)
        self._cursor += n
        return out

    def consume(self, n: int) -> None:
        if n < 0:
            raise ValueError("cannot unconsume bits")
        self._ensure(self._cursor + n)
        self._cursor += n

    def _ensure(self, length: int) -> None:
        missing = length - len(self._buf)
        if missing <= 0:
            return
        missing = max(missing, _FILL_CHUNK)
        if self.filler is None:
            self._buf.extend(bytes(missing))
        else:
            start = len(self._buf) - self._explicit
            chunk = self.filler(start, missing)
            if len(chunk) != missing:
                raise ValueError("filler returned wrong number of bits")
            self._buf.extend(chunk)

    # -- whole-stream views --------------------------------------------

    def bits(self) -> list[int]:
        """All explicit bits, ignoring the cursor."""
        return list(self._buf[:self._explicit])

    def to01(self) -> str:
        return "".join(str(b) for b in self.bits())

    def to_bytes(self) -> bytes:
        """Pack explicit bits MSB-first; length must be a byte multiple."""
        if self._explicit % 8:
            raise ValueError("bit length is not a whole number of bytes")
        out = bytearray()
        for i in range(0, self._explicit, 8):
            byte = 0
            for b in self._buf[i:i + 8]:
                byte = (byte << 1) | b
            out.append(byte)
        return bytes(out)

    def xor(self, other: "BitStream") -> "BitStream":
        """Bitwise XOR over this stream's explicit length."""
        mask = other.bits()
        if len(mask) < self._explicit:
            raise ValueError("xor mask shorter than stream")
        return BitStream(
            a ^ b for a, b in zip(self.bits(), mask[:self._explicit])
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BitStream):
            return NotImplemented
        return self.bits() == other.bits()

    def __hash__(self):  # pragma: no cover - streams are not dict keys
        return hash(tuple(self.bits()))

    def __repr__(self) -> str:
        shown = self.to01() if self._explicit <= 48 else self.to01()[:45] + "..."
        return f"BitStream({shown!r}, cursor={self._cursor})"


class MaskedBitStream:
    """Read-only XOR view over a base stream, starting at its cursor.

    Position ``i`` reads ``base.bit_at(i) ^ mask(i - offset)`` where the
    offset is the base cursor at construction time.  Consumption is
    forwarded to the base stream, so a walk over the view advances the
    underlying cursor.
    """

    __slots__ = ("_base", "_mask", "_offset")

    def __init__(self, base: BitStream, mask_bit: Callable[[int], int]):
        self._base = base
        self._mask = mask_bit
        self._offset = base.cursor

    @property
    def cursor(self) -> int:
        return self._base.cursor

    def bit_at(self, index: int) -> int:
        if index < self._offset:
            raise IndexError("masked view cannot read before its origin")
        return self._base.bit_at(index) ^ self._mask(index - self._offset)

    def consume(self, n: int) -> None:
        self._base.consume(n)
