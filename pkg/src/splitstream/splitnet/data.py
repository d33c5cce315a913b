"""Seeded synthetic shape-classification data: circles, squares, triangles.

Each image is a 32x32 grayscale tensor with one bright filled shape on a
dim noisy background; class identity is the shape.  Generation is fully
deterministic given the seed, and datasets round-trip through tensor files
plus a ``labels.csv`` (``index,label``).
"""

from __future__ import annotations

import csv
import os
from typing import List, Tuple

import numpy as np

from ..tensor import FeatureTensor, load_tensor_file, save_tensor_file

CLASS_NAMES = ("circle", "square", "triangle")
IMAGE_SIDE = 32


def _render(label: int, rng: np.random.Generator) -> np.ndarray:
    side = IMAGE_SIDE
    yy, xx = np.mgrid[0:side, 0:side].astype(np.float64)
    cx = rng.uniform(11.0, 21.0)
    cy = rng.uniform(11.0, 21.0)
    r = rng.uniform(4.5, 9.0)
    background = rng.uniform(0.05, 0.15)
    brightness = rng.uniform(0.55, 0.95)
    if label == 0:
        mask = (xx - cx) ** 2 + (yy - cy) ** 2 <= r * r
    elif label == 1:
        half = r * 0.82
        mask = (np.abs(xx - cx) <= half) & (np.abs(yy - cy) <= half)
    else:
        # filled isoceles triangle, apex up
        t = (yy - (cy - r)) / (2.0 * r)
        mask = (t >= 0.0) & (t <= 1.0) & (np.abs(xx - cx) <= t * r)
    img = np.full((side, side), background)
    img[mask] = brightness
    img += rng.normal(0.0, 0.06, size=img.shape)
    return np.clip(img, 0.0, 1.0)


def generate_dataset(seed: int, count: int) -> List[Tuple[FeatureTensor, int]]:
    """``count`` labeled images from one seeded stream."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        label = int(rng.integers(0, len(CLASS_NAMES)))
        img = _render(label, rng).astype(np.float32)
        out.append((FeatureTensor(img[:, :, None]), label))
    return out


def save_dataset(dataset, out_dir) -> None:
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "labels.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "label"])
        for i, (tensor, label) in enumerate(dataset):
            save_tensor_file(tensor, os.path.join(out_dir, f"img_{i:05d}.ften"))
            writer.writerow([i, label])


def load_dataset(in_dir) -> List[Tuple[FeatureTensor, int]]:
    labels_path = os.path.join(in_dir, "labels.csv")
    with open(labels_path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["index", "label"]:
            raise ValueError(f"unexpected labels header {header} in {labels_path}")
        rows = [(int(i), int(label)) for i, label in reader]
    out = []
    for i, label in rows:
        tensor = load_tensor_file(os.path.join(in_dir, f"img_{i:05d}.ften"))
        out.append((tensor, label))
    return out
