"""Split execution: run a prefix on-device, transfer features, finish remotely.

Three transfer modes are supported: raw float32 samples, quantization plus
lossless coding, and quantization plus lossy coding at a chosen QP.  The
returned transfer record always carries ``total_bytes`` as packed on the
wire, so rate accounting downstream needs no corrections.
"""

from __future__ import annotations

import io
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .. import codec
from ..metrics import RDCurve, kbpi
from ..qlayer import dequantize, quantize
from ..tensor import FeatureTensor, save_tensor
from ..tiler import MODE_QUILTING, MODE_TILING, plan_layout, quilt, rebuild, tile
from .network import NetworkSpec, run_layers

MODE_FLOAT = "float32_lossless"
MODE_QUANT_LOSSLESS = "quantized_lossless"
MODE_LOSSY = "lossy"

THREADS_ENV = "SPLITSTREAM_THREADS"


@dataclass(frozen=True)
class SplitPlan:
    split_index: int
    mode: str = MODE_FLOAT
    n_bit: int = 8
    qp: Optional[int] = None
    tiling: str = MODE_TILING

    def __post_init__(self) -> None:
        if self.mode not in (MODE_FLOAT, MODE_QUANT_LOSSLESS, MODE_LOSSY):
            raise ValueError(f"unknown transfer mode {self.mode!r}")
        if self.mode == MODE_LOSSY and self.qp is None:
            raise ValueError("lossy transfer needs a qp")
        if self.tiling not in (MODE_TILING, MODE_QUILTING):
            raise ValueError(f"unknown tiling mode {self.tiling!r}")
        if self.split_index < 0:
            raise ValueError("split_index must be >= 0")

    def describe(self) -> str:
        if self.mode == MODE_LOSSY:
            return f"lossy(qp={self.qp})"
        return "float32" if self.mode == MODE_FLOAT else "lossless"


@dataclass(frozen=True)
class RawTransfer:
    """Uncompressed float32 transfer; sized as the tensor file format."""

    total_bytes: int


def _as_feature_tensor(x: np.ndarray) -> FeatureTensor:
    if x.ndim == 1:
        x = x.reshape(1, 1, -1)
    return FeatureTensor(x)


def transfer_features(feats: FeatureTensor, plan: SplitPlan):
    """Apply the plan's transfer to one feature tensor.

    Returns (reconstructed features, transfer record).  Compressed modes
    pack and re-parse the container so the decode side sees exactly the
    bytes that were counted.
    """
    if plan.mode == MODE_FLOAT:
        sink = io.BytesIO()
        nbytes = save_tensor(feats, sink)
        return feats, RawTransfer(total_bytes=nbytes)
    q = quantize(feats, plan.n_bit)
    layout = plan_layout(q.rows, q.cols, q.channels, mode=plan.tiling)
    img = tile(q, layout) if plan.tiling == MODE_TILING else quilt(q, layout)
    if plan.mode == MODE_QUANT_LOSSLESS:
        bs = codec.encode_lossless(img)
    else:
        bs = codec.encode_lossy(img, plan.qp)
    received = codec.unpack(codec.pack(bs))
    restored = dequantize(rebuild(codec.decode_image(received)))
    return restored, received


def forward_split(net: NetworkSpec, v: FeatureTensor, plan: SplitPlan):
    """Split inference on one input; returns (class scores, transfer record)."""
    if not 0 <= plan.split_index <= len(net.layers):
        raise ValueError(f"split_index {plan.split_index} outside "
                         f"[0, {len(net.layers)}]")
    x = v.data[None, ...].astype(np.float32)
    x, _ = run_layers(net, x, stop=plan.split_index, dtype=np.float32)
    feats = _as_feature_tensor(x[0])
    restored, record = transfer_features(feats, plan)
    y = restored.data.astype(np.float32)
    y = y.reshape(x.shape[1:]) if x.ndim > 2 else y.reshape(-1)
    out, _ = run_layers(net, y[None, ...], start=plan.split_index,
                        dtype=np.float32)
    return out[0], record


def _worker_count() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _ordered_map(fn, items):
    workers = _worker_count()
    if workers == 1 or len(items) < 2:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def evaluate_plan(net: NetworkSpec, dataset: Sequence, plan: SplitPlan):
    """Accuracy and mean rate of one plan over (tensor, label) pairs."""
    if not dataset:
        raise ValueError("empty dataset")

    def run(item):
        tensor, label = item
        scores, record = forward_split(net, tensor, plan)
        return int(np.argmax(scores)) == label, record

    results = _ordered_map(run, list(dataset))
    correct = sum(1 for hit, _ in results if hit)
    rate = kbpi([rec for _, rec in results], len(results))
    return rate, correct / len(results)


def rd_sweep(net: NetworkSpec, dataset: Sequence, split_index: int,
             plans: Sequence[SplitPlan]) -> RDCurve:
    """One rate/accuracy point per plan, assembled into a curve."""
    points = []
    for plan in plans:
        if plan.split_index != split_index:
            plan = SplitPlan(split_index=split_index, mode=plan.mode,
                             n_bit=plan.n_bit, qp=plan.qp, tiling=plan.tiling)
        rate, accuracy = evaluate_plan(net, dataset, plan)
        points.append((rate, accuracy))
    return RDCurve(points=tuple(points))


def evaluate_accuracy(net: NetworkSpec, dataset: Sequence) -> float:
    """Plain (unsplit) float32 classification accuracy."""
    from .network import forward

    def run(item):
        tensor, label = item
        scores, _ = forward(net, tensor)
        return int(np.argmax(scores)) == label

    hits = _ordered_map(run, list(dataset))
    return sum(hits) / len(hits)
