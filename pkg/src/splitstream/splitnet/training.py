"""Deterministic SGD training, optionally with compression at a split point.

Augmented training compresses the split-point features on every forward
pass with a coding mode drawn uniformly from a menu ("lossless" or a lossy
QP), then feeds the reconstruction downstream.  Gradients treat the
compression stage as identity (straight-through), so upstream layers still
learn.  Everything is driven by one seeded generator: a fixed seed yields
bit-identical weights.
"""

from __future__ import annotations

from typing import List, Optional, Sequence, Tuple

import numpy as np

from .. import codec
from ..qlayer import dequantize, quantize
from ..tensor import FeatureTensor
from ..tiler import MODE_TILING, plan_layout, quilt, rebuild, tile
from .layers import cross_entropy
from .network import (NetworkSpec, backward_through, forward_with_caches,
                      sgd_step)
from .split_exec import evaluate_accuracy

LOSSLESS = "lossless"
DEFAULT_QP_MENU = (LOSSLESS, 22, 27, 32, 37)


def _compress_sample(sample: np.ndarray, entry, n_bit: int,
                     tiling: str) -> np.ndarray:
    shape = sample.shape
    x = sample if sample.ndim == 3 else sample.reshape(1, 1, -1)
    feats = FeatureTensor(x.astype(np.float32))
    q = quantize(feats, n_bit)
    layout = plan_layout(q.rows, q.cols, q.channels, mode=tiling)
    img = tile(q, layout) if tiling == MODE_TILING else quilt(q, layout)
    if entry == LOSSLESS:
        bs = codec.encode_lossless(img)
    else:
        bs = codec.encode_lossy(img, int(entry))
    restored = dequantize(rebuild(codec.decode_image(bs)))
    return restored.data.reshape(shape)


def _compress_batch(acts: np.ndarray, entry, n_bit: int,
                    tiling: str) -> np.ndarray:
    out = np.empty_like(acts)
    for i in range(acts.shape[0]):
        out[i] = _compress_sample(acts[i], entry, n_bit, tiling)
    return out


def train(net: NetworkSpec, train_set: Sequence, *, epochs: int,
          lr: float = 0.05, batch_size: int = 32, seed: int = 0,
          split_index: Optional[int] = None,
          qp_menu: Optional[Sequence] = None, n_bit: int = 8,
          tiling: str = MODE_TILING,
          test_set: Optional[Sequence] = None) -> Tuple[NetworkSpec, List[dict]]:
    """SGD on cross-entropy; returns (trained net, per-epoch log rows).

    With ``qp_menu`` and ``split_index`` set, each batch's features are
    compressed at the split with a menu entry drawn from the seeded RNG.
    """
    if epochs < 0:
        raise ValueError("epochs must be >= 0")
    augment = qp_menu is not None
    if augment:
        if split_index is None:
            raise ValueError("augmented training needs a split_index")
        if not 0 <= split_index <= len(net.layers):
            raise ValueError(f"split_index {split_index} outside network")
        if not qp_menu:
            raise ValueError("qp_menu must not be empty")

    work = net.copy()
    inputs = np.stack([t.data for t, _ in train_set]).astype(np.float64)
    labels = np.array([label for _, label in train_set], dtype=np.int64)
    rng = np.random.default_rng(seed)
    log: List[dict] = []

    for epoch in range(epochs):
        perm = rng.permutation(len(inputs))
        losses = []
        for start in range(0, len(inputs), batch_size):
            idx = perm[start:start + batch_size]
            xb, yb = inputs[idx], labels[idx]
            if augment:
                entry = qp_menu[int(rng.integers(len(qp_menu)))]
                feats, front_caches = forward_with_caches(work, xb,
                                                          stop=split_index)
                restored = _compress_batch(feats, entry, n_bit, tiling)
                probs, back_caches = forward_with_caches(work, restored,
                                                         start=split_index)
                loss, dprobs = cross_entropy(probs, yb)
                dsplit, back_grads = backward_through(work, back_caches,
                                                      dprobs,
                                                      start=split_index)
                # straight-through: the codec passes gradients unchanged
                _, front_grads = backward_through(work, front_caches, dsplit,
                                                  stop=split_index)
                grads = front_grads + back_grads
            else:
                probs, caches = forward_with_caches(work, xb)
                loss, dprobs = cross_entropy(probs, yb)
                _, grads = backward_through(work, caches, dprobs)
            work = sgd_step(work, grads, lr)
            losses.append(loss)
        row = {"epoch": epoch + 1,
               "train_loss": float(np.mean(losses)) if losses else 0.0}
        if test_set is not None:
            row["test_acc"] = evaluate_accuracy(work, test_set)
        log.append(row)
    return work, log


def train_augmented(net: NetworkSpec, dataset: Sequence, split_index: int,
                    qp_menu: Sequence = DEFAULT_QP_MENU, epochs: int = 5,
                    seed: int = 0, **kwargs) -> Tuple[NetworkSpec, List[dict]]:
    """Compression-augmented training with the default mode menu."""
    return train(net, dataset, epochs=epochs, seed=seed,
                 split_index=split_index, qp_menu=qp_menu, **kwargs)
