"""Lossless tile-image codec: gradient-adaptive prediction + exp-Golomb.

Samples are raster scanned and predicted from their causal neighbors
(left a, above b, above-left c) with the median edge detector:
min(a, b) if c >= max(a, b); max(a, b) if c <= min(a, b); else a + b - c.
Out-of-image neighbors read as zero.  Prediction residuals are folded to
unsigned values and grouped into 16x16 blocks; each block is either flagged
all-zero (one bit) or coded with order-k exp-Golomb, k in [0, 7] chosen by
exhaustive trial and spent as a 3-bit field.
"""

from __future__ import annotations

import numpy as np

from ..qlayer import QuantHeader
from ..tiler import TileImage, TileLayout
from .bitio import BitReader, BitWriter, exp_golomb_length

BLOCK = 16
_K_RANGE = 8


class LosslessDecodeError(ValueError):
    """Payload inconsistent with a valid encoding."""


def _med_predict_plane(img: np.ndarray) -> np.ndarray:
    """Vectorized causal prediction of every sample from the clean image."""
    a = np.zeros_like(img)
    b = np.zeros_like(img)
    c = np.zeros_like(img)
    a[:, 1:] = img[:, :-1]
    b[1:, :] = img[:-1, :]
    c[1:, 1:] = img[:-1, :-1]
    lo = np.minimum(a, b)
    hi = np.maximum(a, b)
    return np.where(c >= hi, lo, np.where(c <= lo, hi, a + b - c))


def _med(a: int, b: int, c: int) -> int:
    if a < b:
        lo, hi = a, b
    else:
        lo, hi = b, a
    if c >= hi:
        return lo
    if c <= lo:
        return hi
    return a + b - c


def _block_ranges(size: int):
    return [(start, min(start + BLOCK, size)) for start in range(0, size, BLOCK)]


def encode_plane(img: np.ndarray) -> bytes:
    """Entropy-code a 2-d integer plane; exact inverse is :func:`decode_plane`."""
    img = np.asarray(img, dtype=np.int32)
    pred = _med_predict_plane(img)
    residual = img - pred
    folded = np.where(residual >= 0, 2 * residual, -2 * residual - 1)

    writer = BitWriter()
    # bit lengths per candidate k, derived from bit_length(u + 2^k)
    for y0, y1 in _block_ranges(img.shape[0]):
        for x0, x1 in _block_ranges(img.shape[1]):
            block = folded[y0:y1, x0:x1].ravel()
            if not block.any():
                writer.write_bits(1, 1)
                continue
            writer.write_bits(0, 1)
            costs = []
            for k in range(_K_RANGE):
                m = block.astype(np.int64) + (1 << k)
                widths = np.frexp(m.astype(np.float64))[1]
                costs.append(int(2 * widths.sum() - (k + 1) * block.size))
            k = int(np.argmin(costs))
            writer.write_bits(k, 3)
            for u in block.tolist():
                writer.write_exp_golomb(u, k)
    return writer.getvalue()


def decode_plane(payload: bytes, height: int, width: int, maxval: int) -> np.ndarray:
    """Decode a plane produced by :func:`encode_plane`."""
    reader = BitReader(payload)
    folded = np.zeros((height, width), dtype=np.int64)
    for y0, y1 in _block_ranges(height):
        for x0, x1 in _block_ranges(width):
            if reader.read_bit():
                continue
            k = reader.read_bits(3)
            count = (y1 - y0) * (x1 - x0)
            vals = [reader.read_exp_golomb(k) for _ in range(count)]
            folded[y0:y1, x0:x1] = np.reshape(vals, (y1 - y0, x1 - x0))
    if reader.bits_left() >= 8:
        raise LosslessDecodeError(f"{reader.bits_left()} unconsumed payload bits")

    residual = np.where(folded % 2 == 0, folded // 2, -(folded + 1) // 2)
    out = np.zeros((height, width), dtype=np.int64)
    for y in range(height):
        res_row = residual[y]
        row = out[y]
        above = out[y - 1] if y else None
        left = 0
        for x in range(width):
            b = int(above[x]) if y else 0
            c = int(above[x - 1]) if (y and x) else 0
            value = _med(left if x else 0, b, c) + int(res_row[x])
            if value < 0 or value > maxval:
                raise LosslessDecodeError(
                    f"reconstructed sample {value} at ({y}, {x}) outside "
                    f"[0, {maxval}]"
                )
            row[x] = value
            left = value
    return out.astype(np.uint16)


def reconstruct_image(payload: bytes, n_bit: int, layout: TileLayout,
                      quant_header: QuantHeader) -> TileImage:
    maxval = (1 << n_bit) - 1
    plane = decode_plane(payload, layout.image_height, layout.image_width, maxval)
    return TileImage(plane, n_bit, layout, quant_header)
