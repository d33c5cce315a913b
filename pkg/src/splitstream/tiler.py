"""Invertible rearrangement of tensor channels into a single-plane image.

Two arrangements are supported: tiling places each channel as a contiguous
N x M block on a grid, quilting interleaves channels at sample granularity
so neighboring output samples come from different channels.  Both produce
a (G_r*N) x (G_c*M) image and are exactly invertible on non-pad positions.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

from .qlayer import QuantHeader, QuantizedTensor

MODE_TILING = "tiling"
MODE_QUILTING = "quilting"
_MODE_CODES = {MODE_TILING: 0, MODE_QUILTING: 1}
_MODE_NAMES = {code: name for name, code in _MODE_CODES.items()}

# mode, grid rows, grid cols, src rows, src cols, src channels
_LAYOUT = struct.Struct("<BHHIII")
LAYOUT_SIZE = _LAYOUT.size  # 17 bytes on the wire


class LayoutError(ValueError):
    """Layout descriptor inconsistent with the data it claims to describe."""


@dataclass(frozen=True)
class TileLayout:
    """Channel-to-image mapping: grid geometry plus source dimensions."""

    mode: str
    grid_rows: int
    grid_cols: int
    src_rows: int
    src_cols: int
    src_channels: int
    pad_value: int = 0

    def __post_init__(self) -> None:
        if self.mode not in _MODE_CODES:
            raise LayoutError(f"unknown mode {self.mode!r}")
        if min(self.grid_rows, self.grid_cols, self.src_rows, self.src_cols,
               self.src_channels) < 1:
            raise LayoutError("all layout counts must be >= 1")
        slots = self.grid_rows * self.grid_cols
        if slots < self.src_channels:
            raise LayoutError(
                f"grid {self.grid_rows}x{self.grid_cols} too small for "
                f"{self.src_channels} channels"
            )
        if slots - self.src_channels >= self.grid_cols:
            raise LayoutError("grid has a fully unused row")

    @property
    def image_height(self) -> int:
        return self.grid_rows * self.src_rows

    @property
    def image_width(self) -> int:
        return self.grid_cols * self.src_cols


class TileImage:
    """Single-plane integer image carrying its layout and quantizer header."""

    __slots__ = ("samples", "n_bit", "layout", "quant_header")

    def __init__(self, samples, n_bit: int, layout: TileLayout,
                 quant_header: QuantHeader) -> None:
        arr = np.asarray(samples, dtype=np.uint16)
        if arr.ndim != 2:
            raise ValueError(f"expected 2-d samples, got {arr.ndim}-d")
        if arr.shape != (layout.image_height, layout.image_width):
            raise LayoutError(
                f"samples {arr.shape} do not match layout "
                f"{layout.image_height}x{layout.image_width}"
            )
        maxval = (1 << n_bit) - 1
        if arr.size and int(arr.max()) > maxval:
            raise ValueError(f"sample {int(arr.max())} exceeds {n_bit}-bit range")
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        self.samples = arr
        self.n_bit = n_bit
        self.layout = layout
        self.quant_header = quant_header

    @property
    def height(self) -> int:
        return self.samples.shape[0]

    @property
    def width(self) -> int:
        return self.samples.shape[1]

    def __eq__(self, other) -> bool:
        if not isinstance(other, TileImage):
            return NotImplemented
        return (
            self.n_bit == other.n_bit
            and self.layout == other.layout
            and self.quant_header == other.quant_header
            and np.array_equal(self.samples, other.samples)
        )

    def __repr__(self) -> str:
        return f"TileImage({self.height}x{self.width}, n_bit={self.n_bit})"


def plan_layout(n: int, m: int, c: int, mode: str = MODE_TILING) -> TileLayout:
    """Choose the near-square channel grid: G_c = ceil(sqrt(C)), G_r = ceil(C/G_c)."""
    if min(n, m, c) < 1:
        raise ValueError("tensor dimensions must be >= 1")
    grid_cols = math.isqrt(c)
    if grid_cols * grid_cols < c:
        grid_cols += 1
    grid_rows = -(-c // grid_cols)
    return TileLayout(mode=mode, grid_rows=grid_rows, grid_cols=grid_cols,
                      src_rows=n, src_cols=m, src_channels=c)


def _check_match(q: QuantizedTensor, layout: TileLayout, mode: str) -> None:
    if layout.mode != mode:
        raise LayoutError(f"layout mode {layout.mode!r}, expected {mode!r}")
    if (q.rows, q.cols, q.channels) != (layout.src_rows, layout.src_cols,
                                        layout.src_channels):
        raise LayoutError(
            f"tensor {q.rows}x{q.cols}x{q.channels} does not match layout source "
            f"{layout.src_rows}x{layout.src_cols}x{layout.src_channels}"
        )


def tile(q: QuantizedTensor, layout: TileLayout) -> TileImage:
    """Place channel c as the N x M block at grid cell (c // G_c, c mod G_c)."""
    _check_match(q, layout, MODE_TILING)
    n, m = layout.src_rows, layout.src_cols
    out = np.full((layout.image_height, layout.image_width), layout.pad_value,
                  dtype=np.uint16)
    for c in range(layout.src_channels):
        r, s = divmod(c, layout.grid_cols)
        out[r * n:(r + 1) * n, s * m:(s + 1) * m] = q.data[:, :, c]
    return TileImage(out, q.header.n_bit, layout, q.header)


def quilt(q: QuantizedTensor, layout: TileLayout) -> TileImage:
    """Send sample (i, j) of channel c to (i*G_r + c//G_c, j*G_c + c mod G_c)."""
    _check_match(q, layout, MODE_QUILTING)
    out = np.full((layout.image_height, layout.image_width), layout.pad_value,
                  dtype=np.uint16)
    gr, gc = layout.grid_rows, layout.grid_cols
    for c in range(layout.src_channels):
        r, s = divmod(c, gc)
        out[r::gr, s::gc] = q.data[:, :, c]
    return TileImage(out, q.header.n_bit, layout, q.header)


def untile(img: TileImage) -> QuantizedTensor:
    """Exact inverse of :func:`tile`; pad samples are discarded."""
    layout = img.layout
    if layout.mode != MODE_TILING:
        raise LayoutError(f"layout mode {layout.mode!r}, expected {MODE_TILING!r}")
    n, m = layout.src_rows, layout.src_cols
    data = np.empty((n, m, layout.src_channels), dtype=np.uint16)
    for c in range(layout.src_channels):
        r, s = divmod(c, layout.grid_cols)
        data[:, :, c] = img.samples[r * n:(r + 1) * n, s * m:(s + 1) * m]
    return QuantizedTensor(img.quant_header, data)


def unquilt(img: TileImage) -> QuantizedTensor:
    """Exact inverse of :func:`quilt`; pad samples are discarded."""
    layout = img.layout
    if layout.mode != MODE_QUILTING:
        raise LayoutError(f"layout mode {layout.mode!r}, expected {MODE_QUILTING!r}")
    gr, gc = layout.grid_rows, layout.grid_cols
    data = np.empty((layout.src_rows, layout.src_cols, layout.src_channels),
                    dtype=np.uint16)
    for c in range(layout.src_channels):
        r, s = divmod(c, gc)
        data[:, :, c] = img.samples[r::gr, s::gc]
    return QuantizedTensor(img.quant_header, data)


def rebuild(img: TileImage) -> QuantizedTensor:
    """Invert whichever arrangement ``img`` carries."""
    if img.layout.mode == MODE_TILING:
        return untile(img)
    return unquilt(img)


def pack_layout(layout: TileLayout) -> bytes:
    """Serialize the layout descriptor (17 bytes, little-endian)."""
    return _LAYOUT.pack(_MODE_CODES[layout.mode], layout.grid_rows,
                        layout.grid_cols, layout.src_rows, layout.src_cols,
                        layout.src_channels)


def unpack_layout(blob: bytes) -> TileLayout:
    """Inverse of :func:`pack_layout`."""
    if len(blob) != LAYOUT_SIZE:
        raise LayoutError(f"layout descriptor must be {LAYOUT_SIZE} bytes")
    code, gr, gc, n, m, c = _LAYOUT.unpack(blob)
    if code not in _MODE_NAMES:
        raise LayoutError(f"unknown mode code {code}")
    return TileLayout(mode=_MODE_NAMES[code], grid_rows=gr, grid_cols=gc,
                      src_rows=n, src_cols=m, src_channels=c)
