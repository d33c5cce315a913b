"""Self-describing compressed-feature container.

Wire layout (little-endian), 40 fixed bytes then the payload:

  magic "DFCC" (4) | version u8 | n_bit u8 | qp u8 | layout (17) |
  vmin f32 | vmax f32 | payload length u32 | CRC32(payload) u32

A qp byte of 0xFF marks a lossless stream; any value in [0, 51] marks a
lossy one.  The CRC covers the payload only.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass

from ..qlayer import SUPPORTED_BIT_DEPTHS, QuantHeader
from ..tiler import LAYOUT_SIZE, TileLayout, pack_layout, unpack_layout
from .lossy import QP_MAX

CONTAINER_MAGIC = b"DFCC"
CONTAINER_VERSION = 1
HEADER_SIZE = 40

MODE_LOSSLESS = "lossless"
MODE_LOSSY = "lossy"

_QP_LOSSLESS = 0xFF
_PRE = struct.Struct("<4sBBB")
_POST = struct.Struct("<ffII")


class ContainerError(ValueError):
    """Container bytes are malformed, corrupt, or of an unknown flavor."""


@dataclass(frozen=True)
class Bitstream:
    """One compressed tensor transfer plus everything needed to decode it."""

    mode: str
    n_bit: int
    quant_header: QuantHeader
    layout: TileLayout
    payload: bytes
    qp: int | None = None

    def __post_init__(self) -> None:
        if self.mode not in (MODE_LOSSLESS, MODE_LOSSY):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == MODE_LOSSY:
            if self.qp is None or not 0 <= self.qp <= QP_MAX:
                raise ValueError(f"lossy stream needs qp in [0, {QP_MAX}]")
        elif self.qp is not None:
            raise ValueError("lossless stream carries no qp")
        if self.n_bit not in SUPPORTED_BIT_DEPTHS:
            raise ValueError(f"unsupported bit depth {self.n_bit}")

    @property
    def total_bytes(self) -> int:
        """Byte length of the packed container, headers included."""
        return HEADER_SIZE + len(self.payload)


def pack(bs: Bitstream) -> bytes:
    """Serialize ``bs``; byte length always equals ``bs.total_bytes``."""
    qp_byte = _QP_LOSSLESS if bs.mode == MODE_LOSSLESS else bs.qp
    head = _PRE.pack(CONTAINER_MAGIC, CONTAINER_VERSION, bs.n_bit, qp_byte)
    head += pack_layout(bs.layout)
    head += _POST.pack(bs.quant_header.vmin, bs.quant_header.vmax,
                       len(bs.payload), zlib.crc32(bs.payload))
    return head + bs.payload


def unpack(blob: bytes) -> Bitstream:
    """Parse container bytes back into a :class:`Bitstream`."""
    if len(blob) < HEADER_SIZE:
        raise ContainerError(f"container shorter than {HEADER_SIZE}-byte header")
    magic, version, n_bit, qp_byte = _PRE.unpack_from(blob, 0)
    if magic != CONTAINER_MAGIC:
        raise ContainerError(f"bad magic {magic!r}")
    if version != CONTAINER_VERSION:
        raise ContainerError(f"unknown version {version}")
    layout = unpack_layout(blob[_PRE.size:_PRE.size + LAYOUT_SIZE])
    vmin, vmax, paylen, crc = _POST.unpack_from(blob, _PRE.size + LAYOUT_SIZE)
    if len(blob) != HEADER_SIZE + paylen:
        raise ContainerError(
            f"container length {len(blob)} != header + {paylen} payload bytes"
        )
    payload = blob[HEADER_SIZE:]
    if zlib.crc32(payload) != crc:
        raise ContainerError("payload CRC mismatch")
    if n_bit not in SUPPORTED_BIT_DEPTHS:
        raise ContainerError(f"unsupported bit depth {n_bit}")
    if qp_byte == _QP_LOSSLESS:
        mode, qp = MODE_LOSSLESS, None
    elif qp_byte <= QP_MAX:
        mode, qp = MODE_LOSSY, int(qp_byte)
    else:
        raise ContainerError(f"qp byte {qp_byte} is neither lossless nor valid")
    header = QuantHeader(vmin=float(vmin), vmax=float(vmax), n_bit=int(n_bit))
    return Bitstream(mode=mode, n_bit=int(n_bit), quant_header=header,
                     layout=layout, payload=payload, qp=qp)
