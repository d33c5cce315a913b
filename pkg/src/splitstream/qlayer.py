"""Uniform min/max quantization of feature tensors and its inverse.

The quantizer maps a real tensor onto n-bit integers with a single
(min, max) pair per tensor; the pair is kept as 32-bit floats so both
sides of a transfer use bit-identical constants.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensor import FeatureTensor, minmax

SUPPORTED_BIT_DEPTHS = (8, 10, 12)


def round_half_away(x: np.ndarray) -> np.ndarray:
    """Round to nearest integer, halves away from zero."""
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


@dataclass(frozen=True)
class QuantHeader:
    """Side information for dequantization: range endpoints and bit depth.

    ``vmin``/``vmax`` are exactly representable as 32-bit floats and occupy
    8 bytes on the wire.
    """

    vmin: float
    vmax: float
    n_bit: int

    def __post_init__(self) -> None:
        if self.n_bit not in SUPPORTED_BIT_DEPTHS:
            raise ValueError(f"unsupported bit depth {self.n_bit}")
        if not (np.isfinite(self.vmin) and np.isfinite(self.vmax)):
            raise ValueError("non-finite range endpoints")
        if self.vmin > self.vmax:
            raise ValueError(f"vmin {self.vmin} > vmax {self.vmax}")

    @property
    def levels(self) -> int:
        """Largest code value, 2^n_bit - 1."""
        return (1 << self.n_bit) - 1


class QuantizedTensor:
    """Integer tensor produced by :func:`quantize` plus its header."""

    __slots__ = ("header", "data")

    def __init__(self, header: QuantHeader, data) -> None:
        arr = np.asarray(data, dtype=np.uint16)
        if arr.ndim != 3 or min(arr.shape) < 1:
            raise ValueError(f"expected non-empty 3-d array, got shape {arr.shape}")
        if arr.size and int(arr.max()) > header.levels:
            raise ValueError(
                f"sample {int(arr.max())} out of range for {header.n_bit}-bit data"
            )
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        self.header = header
        self.data = arr

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    def __eq__(self, other) -> bool:
        if not isinstance(other, QuantizedTensor):
            return NotImplemented
        return self.header == other.header and np.array_equal(self.data, other.data)

    def __repr__(self) -> str:
        return (
            f"QuantizedTensor({self.rows}x{self.cols}x{self.channels}, "
            f"n_bit={self.header.n_bit})"
        )


def quantize(v: FeatureTensor, n_bit: int) -> QuantizedTensor:
    """Quantize ``v`` to ``n_bit`` integers over its own [min, max] range.

    Each output is round((x - vmin) / (vmax - vmin) * (2^n_bit - 1)) with
    halves rounded up (inputs to the rounding are nonnegative).  A constant
    tensor quantizes to all zeros; the constant survives in the header.
    """
    if n_bit not in SUPPORTED_BIT_DEPTHS:
        raise ValueError(f"unsupported bit depth {n_bit}")
    stats = minmax(v)
    vmin = float(np.float32(stats.min))
    vmax = float(np.float32(stats.max))
    header = QuantHeader(vmin=vmin, vmax=vmax, n_bit=n_bit)
    if vmin == vmax:
        codes = np.zeros(v.data.shape, dtype=np.uint16)
        return QuantizedTensor(header, codes)
    x = v.data.astype(np.float64)
    scaled = (x - vmin) / (vmax - vmin) * header.levels
    codes = np.clip(round_half_away(scaled), 0, header.levels).astype(np.uint16)
    return QuantizedTensor(header, codes)


def dequantize(q: QuantizedTensor) -> FeatureTensor:
    """Reconstruct the real tensor: q * (vmax - vmin) / (2^n_bit - 1) + vmin."""
    h = q.header
    if q.data.size and int(q.data.max()) > h.levels:
        raise ValueError(
            f"sample {int(q.data.max())} out of range for {h.n_bit}-bit data"
        )
    if h.vmin == h.vmax:
        return FeatureTensor(np.full(q.data.shape, h.vmin, dtype=np.float32))
    x = q.data.astype(np.float64) * (h.vmax - h.vmin) / h.levels + h.vmin
    return FeatureTensor(x.astype(np.float32))
