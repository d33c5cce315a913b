"""Lossy tile-image codec: 16x16 block DCT with QP-controlled quantization.

Each 16x16 block (edges padded by replication) is level-shifted by
2^(n_bit-1), transformed with the orthonormal 2-d DCT-II, and uniformly
quantized with step 2^((qp - 4) / 6).  The quantized DC is differentially
coded against the previous block in raster order; AC coefficients are
zigzag scanned into (run, level) pairs, each coded with order-0 exp-Golomb,
with a run code of zero acting as the end-of-block symbol.
"""

from __future__ import annotations

import numpy as np

from ..qlayer import QuantHeader, round_half_away
from ..tiler import TileImage, TileLayout
from .bitio import BitReader, BitWriter, fold_signed, unfold_signed

BLOCK = 16
QP_MIN = 0
QP_MAX = 51


class LossyDecodeError(ValueError):
    """Payload inconsistent with a valid encoding."""


def qstep(qp: int) -> float:
    """Quantizer step for a quantization parameter: doubles every 6 QP."""
    if not QP_MIN <= qp <= QP_MAX:
        raise ValueError(f"qp {qp} outside [{QP_MIN}, {QP_MAX}]")
    return 2.0 ** ((qp - 4) / 6.0)


def _dct_matrix(n: int = BLOCK) -> np.ndarray:
    k = np.arange(n)[:, None]
    x = np.arange(n)[None, :]
    mat = np.cos(np.pi * (2 * x + 1) * k / (2 * n)) * np.sqrt(2.0 / n)
    mat[0, :] = np.sqrt(1.0 / n)
    return mat


_DCT = _dct_matrix()


def dct2(block: np.ndarray) -> np.ndarray:
    """Orthonormal forward 2-d DCT-II of a 16x16 block."""
    return _DCT @ block @ _DCT.T


def idct2(coeffs: np.ndarray) -> np.ndarray:
    """Inverse of :func:`dct2`."""
    return _DCT.T @ coeffs @ _DCT


def _zigzag_order(n: int = BLOCK):
    order = []
    for d in range(2 * n - 1):
        if d % 2:
            rows = range(max(0, d - n + 1), min(d, n - 1) + 1)
        else:
            rows = range(min(d, n - 1), max(0, d - n + 1) - 1, -1)
        order.extend((i, d - i) for i in rows)
    return order

_ZIGZAG = _zigzag_order()
_ZZ_ROWS = np.array([i for i, _ in _ZIGZAG])
_ZZ_COLS = np.array([j for _, j in _ZIGZAG])


def _fold_level(level: int) -> int:
    # nonzero levels only; 1,-1,2,-2 -> 0,1,2,3
    return 2 * (level - 1) if level > 0 else -2 * level - 1


def _unfold_level(u: int) -> int:
    return u // 2 + 1 if u % 2 == 0 else -(u + 1) // 2


def _padded(img: np.ndarray) -> np.ndarray:
    h, w = img.shape
    ph = (-h) % BLOCK
    pw = (-w) % BLOCK
    if ph or pw:
        img = np.pad(img, ((0, ph), (0, pw)), mode="edge")
    return img


def encode_plane(img: np.ndarray, qp: int, n_bit: int) -> bytes:
    """Transform-code a 2-d integer plane at the given QP."""
    step = qstep(qp)
    mid = 1 << (n_bit - 1)
    shifted = _padded(np.asarray(img, dtype=np.float64)) - mid
    height, width = shifted.shape

    writer = BitWriter()
    prev_dc = 0
    for y0 in range(0, height, BLOCK):
        for x0 in range(0, width, BLOCK):
            coeffs = dct2(shifted[y0:y0 + BLOCK, x0:x0 + BLOCK])
            q = round_half_away(coeffs / step).astype(np.int64)
            dc = int(q[0, 0])
            writer.write_exp_golomb(fold_signed(dc - prev_dc))
            prev_dc = dc
            scanned = q[_ZZ_ROWS, _ZZ_COLS][1:]
            run = 0
            for level in scanned.tolist():
                if level == 0:
                    run += 1
                    continue
                writer.write_exp_golomb(run + 1)
                writer.write_exp_golomb(_fold_level(level))
                run = 0
            writer.write_exp_golomb(0)  # end of block
    return writer.getvalue()


def decode_plane(payload: bytes, height: int, width: int, qp: int,
                 n_bit: int) -> np.ndarray:
    """Decode a plane produced by :func:`encode_plane`."""
    step = qstep(qp)
    mid = 1 << (n_bit - 1)
    maxval = (1 << n_bit) - 1
    padded_h = height + ((-height) % BLOCK)
    padded_w = width + ((-width) % BLOCK)
    ncoef = BLOCK * BLOCK

    out = np.empty((padded_h, padded_w), dtype=np.float64)
    reader = BitReader(payload)
    prev_dc = 0
    for y0 in range(0, padded_h, BLOCK):
        for x0 in range(0, padded_w, BLOCK):
            q = np.zeros(ncoef, dtype=np.int64)
            dc = prev_dc + unfold_signed(reader.read_exp_golomb())
            q[0] = dc
            prev_dc = dc
            pos = 1
            while True:
                run_code = reader.read_exp_golomb()
                if run_code == 0:
                    break
                pos += run_code - 1
                if pos >= ncoef:
                    raise LossyDecodeError(f"coefficient index {pos} out of block")
                q[pos] = _unfold_level(reader.read_exp_golomb())
                pos += 1
            coeffs = np.zeros((BLOCK, BLOCK), dtype=np.float64)
            coeffs[_ZZ_ROWS, _ZZ_COLS] = q * step
            out[y0:y0 + BLOCK, x0:x0 + BLOCK] = idct2(coeffs)
    if reader.bits_left() >= 8:
        raise LossyDecodeError(f"{reader.bits_left()} unconsumed payload bits")

    plane = np.clip(round_half_away(out + mid), 0, maxval).astype(np.uint16)
    return plane[:height, :width]


def reconstruct_image(payload: bytes, qp: int, n_bit: int, layout: TileLayout,
                      quant_header: QuantHeader) -> TileImage:
    plane = decode_plane(payload, layout.image_height, layout.image_width, qp, n_bit)
    return TileImage(plane, n_bit, layout, quant_header)
