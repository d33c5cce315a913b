"""Encoders and decoders for tile images, plus the transfer container.

Two payload formats share one container: a lossless predictive coder and a
QP-controlled block-DCT transform coder.  ``compress_tensor`` and
``decompress_tensor`` wrap the full quantize/tile/encode chain for callers
that work directly with feature tensors.
"""

from __future__ import annotations

from ..qlayer import dequantize, quantize
from ..tensor import FeatureTensor
from ..tiler import (MODE_TILING, TileImage, plan_layout, quilt, rebuild,
                     tile)
from . import lossless as _lossless
from . import lossy as _lossy
from .bitio import BitstreamCorrupt, BitstreamTruncated
from .container import (CONTAINER_MAGIC, HEADER_SIZE, MODE_LOSSLESS,
                        MODE_LOSSY, Bitstream, ContainerError, pack, unpack)
from .lossless import LosslessDecodeError
from .lossy import QP_MAX, QP_MIN, LossyDecodeError, dct2, idct2, qstep

__all__ = [
    "Bitstream", "ContainerError", "BitstreamCorrupt", "BitstreamTruncated",
    "LosslessDecodeError", "LossyDecodeError", "MODE_LOSSLESS", "MODE_LOSSY",
    "CONTAINER_MAGIC", "HEADER_SIZE", "QP_MIN", "QP_MAX",
    "encode_lossless", "decode_lossless", "encode_lossy", "decode_lossy",
    "pack", "unpack", "qstep", "dct2", "idct2",
    "compress_tensor", "decompress_tensor",
]


def encode_lossless(img: TileImage) -> Bitstream:
    """Losslessly encode ``img``; round trips bit-exactly."""
    payload = _lossless.encode_plane(img.samples)
    return Bitstream(mode=MODE_LOSSLESS, n_bit=img.n_bit,
                     quant_header=img.quant_header, layout=img.layout,
                     payload=payload)


def decode_lossless(bs: Bitstream) -> TileImage:
    if bs.mode != MODE_LOSSLESS:
        raise ValueError(f"stream mode is {bs.mode!r}, not lossless")
    return _lossless.reconstruct_image(bs.payload, bs.n_bit, bs.layout,
                                       bs.quant_header)


def encode_lossy(img: TileImage, qp: int) -> Bitstream:
    """Transform-code ``img`` at quantization parameter ``qp``."""
    payload = _lossy.encode_plane(img.samples, qp, img.n_bit)
    return Bitstream(mode=MODE_LOSSY, n_bit=img.n_bit,
                     quant_header=img.quant_header, layout=img.layout,
                     payload=payload, qp=qp)


def decode_lossy(bs: Bitstream) -> TileImage:
    if bs.mode != MODE_LOSSY:
        raise ValueError(f"stream mode is {bs.mode!r}, not lossy")
    return _lossy.reconstruct_image(bs.payload, bs.qp, bs.n_bit, bs.layout,
                                    bs.quant_header)


def encode_image(img: TileImage, mode: str, qp: int | None = None) -> Bitstream:
    if mode == MODE_LOSSLESS:
        return encode_lossless(img)
    if mode == MODE_LOSSY:
        if qp is None:
            raise ValueError("lossy encoding needs a qp")
        return encode_lossy(img, qp)
    raise ValueError(f"unknown mode {mode!r}")


def decode_image(bs: Bitstream) -> TileImage:
    return decode_lossless(bs) if bs.mode == MODE_LOSSLESS else decode_lossy(bs)


def compress_tensor(v: FeatureTensor, mode: str, n_bit: int = 8,
                    qp: int | None = None,
                    tiling: str = MODE_TILING) -> Bitstream:
    """Quantize, arrange, and encode a feature tensor in one step."""
    q = quantize(v, n_bit)
    layout = plan_layout(q.rows, q.cols, q.channels, mode=tiling)
    img = tile(q, layout) if tiling == MODE_TILING else quilt(q, layout)
    return encode_image(img, mode, qp)


def decompress_tensor(bs: Bitstream) -> FeatureTensor:
    """Inverse of :func:`compress_tensor` up to quantization error."""
    return dequantize(rebuild(decode_image(bs)))
