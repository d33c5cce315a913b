"""Feature-tensor data model, its binary file format, and basic statistics."""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import BinaryIO

import numpy as np

FTEN_MAGIC = b"FTEN"
FTEN_VERSION = 1

# magic, version, flags, reserved, rows, cols, channels -- all little-endian
_HEADER = struct.Struct("<4sBBHIII")
FTEN_HEADER_SIZE = _HEADER.size

_U32_MAX = 0xFFFFFFFF
# refuse to allocate absurd payloads from a hostile header (2^33 samples = 32 GiB)
_MAX_SAMPLES = 1 << 33


class TensorFormatError(ValueError):
    """Malformed, truncated, or oversized tensor file data."""


class FeatureTensor:
    """Immutable N x M x C activation tensor.

    Samples are 32-bit floats in row-major order with the channel index
    innermost: element (n, m, c) lives at flat offset (n*M + m)*C + c.
    All values must be finite.
    """

    __slots__ = ("data",)

    def __init__(self, data) -> None:
        arr = np.asarray(data, dtype=np.float32)
        if arr.ndim != 3:
            raise ValueError(f"expected a 3-d array, got {arr.ndim}-d")
        if min(arr.shape) < 1:
            raise ValueError(f"all dimensions must be >= 1, got shape {arr.shape}")
        finite = np.isfinite(arr)
        if not finite.all():
            idx = int(np.flatnonzero(~finite.ravel())[0])
            raise ValueError(f"non-finite value at flat index {idx}")
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    @property
    def size(self) -> int:
        return self.data.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, FeatureTensor):
            return NotImplemented
        # bit-exact comparison, not value comparison
        return self.data.shape == other.data.shape and (
            self.data.tobytes() == other.data.tobytes()
        )

    def __hash__(self):  # pragma: no cover - mutability guard only
        return hash((self.data.shape, self.data.tobytes()))

    def __repr__(self) -> str:
        return f"FeatureTensor({self.rows}x{self.cols}x{self.channels})"


@dataclass(frozen=True)
class TensorStats:
    """Exact elementwise extrema of a feature tensor."""

    min: float
    max: float


def minmax(v: FeatureTensor) -> TensorStats:
    """Exact minimum and maximum over all samples of ``v``."""
    return TensorStats(min=float(v.data.min()), max=float(v.data.max()))


def save_tensor(v: FeatureTensor, sink: BinaryIO) -> int:
    """Write ``v`` to ``sink`` in FTEN format. Returns bytes written."""
    n, m, c = v.data.shape
    if max(n, m, c) > _U32_MAX:
        raise TensorFormatError(f"dimension overflow: {n}x{m}x{c} exceeds u32")
    header = _HEADER.pack(FTEN_MAGIC, FTEN_VERSION, 0, 0, n, m, c)
    payload = v.data.astype("<f4", copy=False).tobytes()
    sink.write(header)
    sink.write(payload)
    return len(header) + len(payload)


def load_tensor(source: BinaryIO) -> FeatureTensor:
    """Read one FTEN tensor from ``source``; inverse of :func:`save_tensor`."""
    header = source.read(FTEN_HEADER_SIZE)
    if len(header) < FTEN_HEADER_SIZE:
        raise TensorFormatError("truncated header")
    magic, version, flags, _reserved, n, m, c = _HEADER.unpack(header)
    if magic != FTEN_MAGIC:
        raise TensorFormatError(f"bad magic {magic!r}")
    if version != FTEN_VERSION:
        raise TensorFormatError(f"unsupported version {version}")
    if flags != 0:
        raise TensorFormatError(f"unknown flag bits 0x{flags:02x}")
    if min(n, m, c) < 1:
        raise TensorFormatError(f"invalid dimensions {n}x{m}x{c}")
    count = n * m * c
    if count > _MAX_SAMPLES:
        raise TensorFormatError(f"dimension overflow: {count} samples")
    payload = source.read(4 * count)
    if len(payload) < 4 * count:
        raise TensorFormatError(
            f"truncated payload: expected {4 * count} bytes, got {len(payload)}"
        )
    arr = np.frombuffer(payload, dtype="<f4", count=count).reshape(n, m, c)
    return FeatureTensor(arr)


def save_tensor_file(v: FeatureTensor, path) -> int:
    with open(path, "wb") as fh:
        return save_tensor(v, fh)


def load_tensor_file(path) -> FeatureTensor:
    with open(path, "rb") as fh:
        return load_tensor(fh)
