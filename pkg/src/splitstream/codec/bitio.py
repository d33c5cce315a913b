"""Bit-level writer/reader and exponential-Golomb codes.

Bits are packed MSB-first within each byte; the final byte of a stream is
zero-padded.  Exp-Golomb codes here are the order-k variant: value v is
written as the binary expansion of v + 2^k preceded by enough zeros to make
the code self-delimiting.
"""

from __future__ import annotations


class BitstreamTruncated(ValueError):
    """Reader ran past the end of the payload."""


class BitstreamCorrupt(ValueError):
    """Payload contains a structurally impossible code."""


# a folded residual of 12-bit data never needs codes anywhere near this long
_MAX_EG_PREFIX = 64


class BitWriter:
    __slots__ = ("_buf", "_acc", "_nacc")

    def __init__(self) -> None:
        self._buf = bytearray()
        self._acc = 0
        self._nacc = 0

    def write_bits(self, value: int, nbits: int) -> None:
        if nbits == 0:
            return
        self._acc = (self._acc << nbits) | (value & ((1 << nbits) - 1))
        self._nacc += nbits
        while self._nacc >= 8:
            self._nacc -= 8
            self._buf.append((self._acc >> self._nacc) & 0xFF)
        self._acc &= (1 << self._nacc) - 1

    def write_exp_golomb(self, value: int, k: int = 0) -> None:
        if value < 0:
            raise ValueError("exp-Golomb encodes nonnegative values")
        m = value + (1 << k)
        width = m.bit_length()  # code is (width-1-k) zeros + m in width bits
        self.write_bits(m, 2 * width - 1 - k)

    def bit_length(self) -> int:
        return 8 * len(self._buf) + self._nacc

    def getvalue(self) -> bytes:
        if self._nacc:
            tail = (self._acc << (8 - self._nacc)) & 0xFF
            return bytes(self._buf) + bytes([tail])
        return bytes(self._buf)


class BitReader:
    __slots__ = ("_data", "_pos", "_nbits")

    def __init__(self, data: bytes) -> None:
        self._data = data
        self._pos = 0
        self._nbits = 8 * len(data)

    def read_bits(self, nbits: int) -> int:
        if self._pos + nbits > self._nbits:
            raise BitstreamTruncated(
                f"needed {nbits} bits at offset {self._pos}, stream has {self._nbits}"
            )
        out = 0
        pos = self._pos
        data = self._data
        remaining = nbits
        while remaining:
            byte_i, bit_i = divmod(pos, 8)
            avail = 8 - bit_i
            take = avail if avail < remaining else remaining
            chunk = (data[byte_i] >> (avail - take)) & ((1 << take) - 1)
            out = (out << take) | chunk
            pos += take
            remaining -= take
        self._pos = pos
        return out

    def read_bit(self) -> int:
        return self.read_bits(1)

    def read_exp_golomb(self, k: int = 0) -> int:
        zeros = 0
        while self.read_bit() == 0:
            zeros += 1
            if zeros > _MAX_EG_PREFIX:
                raise BitstreamCorrupt("exp-Golomb prefix too long")
        width = zeros + k
        rest = self.read_bits(width) if width else 0
        return ((1 << width) | rest) - (1 << k)

    def bits_left(self) -> int:
        return self._nbits - self._pos


def exp_golomb_length(value: int, k: int = 0) -> int:
    """Code length in bits of ``value`` under order-k exp-Golomb."""
    return 2 * (value + (1 << k)).bit_length() - 1 - k


def fold_signed(d: int) -> int:
    """Map a signed integer to an unsigned code: 0,-1,1,-2,2 -> 0,1,2,3,4."""
    return 2 * d if d >= 0 else -2 * d - 1


def unfold_signed(u: int) -> int:
    """Inverse of :func:`fold_signed`."""
    return u // 2 if u % 2 == 0 else -(u + 1) // 2
