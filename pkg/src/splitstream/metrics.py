"""Evaluation mathematics: rate, distortion, detection loss, BD-rate.

Rates are reported in KBPI (kilobits per image, kilo = 1000) and always
include container headers.  The Bjontegaard delta fits log10(rate) as a
cubic in quality and integrates over the overlapping quality interval;
negative values mean the test curve needs less rate at equal quality.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .tensor import FeatureTensor


def kbpi(streams: Sequence, image_count: int) -> float:
    """Average kilobits per image over packed transfer sizes."""
    if image_count < 1:
        raise ValueError("image_count must be >= 1")
    if not streams:
        raise ValueError("no streams given")
    total = sum(s.total_bytes for s in streams)
    return total * 8 / 1000 / image_count


def mse(a: FeatureTensor, b: FeatureTensor) -> float:
    if a.data.shape != b.data.shape:
        raise ValueError(f"shape mismatch {a.data.shape} vs {b.data.shape}")
    diff = a.data.astype(np.float64) - b.data.astype(np.float64)
    return float(np.mean(diff * diff))


def psnr_from_mse(mean_sq_err: float, peak: float) -> float:
    if peak <= 0:
        raise ValueError("peak must be positive")
    if mean_sq_err == 0:
        return math.inf
    return 10.0 * math.log10(peak * peak / mean_sq_err)


# ---------------------------------------------------------------------------
# detection loss


@dataclass(frozen=True)
class Box:
    """Axis-aligned box: center (x, y), width w, height h, normalized units."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self) -> None:
        for name in ("x", "y", "w", "h"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"non-finite box field {name}")
        if self.w < 0 or self.h < 0:
            raise ValueError(f"negative box size w={self.w}, h={self.h}")


def iou(a: Box, b: Box) -> float:
    """Intersection over union of two boxes; 0 when the union is empty."""
    ix = min(a.x + a.w / 2, b.x + b.w / 2) - max(a.x - a.w / 2, b.x - b.w / 2)
    iy = min(a.y + a.h / 2, b.y + b.h / 2) - max(a.y - a.h / 2, b.y - b.h / 2)
    inter = max(ix, 0.0) * max(iy, 0.0)
    union = a.w * a.h + b.w * b.h - inter
    if union <= 0:
        return 0.0
    return inter / union


@dataclass(frozen=True)
class LossWeights:
    lambda_coord: float = 5.0
    lambda_noobj: float = 0.5

    def __post_init__(self) -> None:
        if self.lambda_coord < 0 or self.lambda_noobj < 0:
            raise ValueError("loss weights must be nonnegative")


@dataclass(frozen=True)
class CellObject:
    """Ground truth for one grid cell: box, one-hot class vector, confidence."""

    box: Box
    class_probs: tuple
    confidence: float = 1.0


@dataclass(frozen=True)
class GridTruth:
    """S x S grid of optional ground-truth objects, row-major cells."""

    S: int
    cells: tuple

    def __post_init__(self) -> None:
        if self.S < 1:
            raise ValueError("grid side must be >= 1")
        if len(self.cells) != self.S * self.S:
            raise ValueError(f"expected {self.S * self.S} cells, got {len(self.cells)}")


@dataclass(frozen=True)
class CellPrediction:
    """Per-cell prediction: B (box, confidence) pairs and class probabilities."""

    boxes: tuple          # of (Box, confidence)
    class_probs: tuple

    def __post_init__(self) -> None:
        if len(self.boxes) < 1:
            raise ValueError("each cell predicts at least one box")


def _responsible_index(boxes, truth_box: Box) -> int:
    # highest IoU wins; ties go to the lowest box index
    best_j, best_v = 0, -1.0
    for j, (pbox, _conf) in enumerate(boxes):
        v = iou(pbox, truth_box)
        if v > best_v:
            best_j, best_v = j, v
    return best_j


def yolo_loss(truth: GridTruth, pred: Sequence[CellPrediction],
              weights: LossWeights = LossWeights()) -> float:
    """Five-term detection loss over an S x S grid.

    Per occupied cell, the box with the highest IoU against the cell's
    ground truth is responsible: it pays coordinate, size (via square
    roots), and confidence terms.  Every other box pays the no-object
    confidence term against the cell's truth confidence (zero for empty
    cells), and occupied cells pay a classification term.
    """
    if len(pred) != truth.S * truth.S:
        raise ValueError(f"expected {truth.S * truth.S} cell predictions")
    b_count = len(pred[0].boxes)
    total = 0.0
    for cell_truth, cell_pred in zip(truth.cells, pred):
        if len(cell_pred.boxes) != b_count:
            raise ValueError("all cells must predict the same number of boxes")
        target_conf = 0.0
        responsible = None
        if cell_truth is not None:
            target_conf = cell_truth.confidence
            responsible = _responsible_index(cell_pred.boxes, cell_truth.box)
        for j, (pbox, conf) in enumerate(cell_pred.boxes):
            if j == responsible:
                tbox = cell_truth.box
                total += weights.lambda_coord * (
                    (tbox.x - pbox.x) ** 2 + (tbox.y - pbox.y) ** 2
                )
                total += weights.lambda_coord * (
                    (math.sqrt(tbox.w) - math.sqrt(pbox.w)) ** 2
                    + (math.sqrt(tbox.h) - math.sqrt(pbox.h)) ** 2
                )
                total += (target_conf - conf) ** 2
            else:
                total += weights.lambda_noobj * (target_conf - conf) ** 2
        if cell_truth is not None:
            if len(cell_truth.class_probs) != len(cell_pred.class_probs):
                raise ValueError("class count mismatch")
            total += sum(
                (p - q) ** 2
                for p, q in zip(cell_truth.class_probs, cell_pred.class_probs)
            )
    return total


# ---------------------------------------------------------------------------
# rate-distortion curves and the Bjontegaard delta


class CurveError(ValueError):
    """Curve unusable for a BD computation."""


@dataclass(frozen=True)
class RDCurve:
    """Operating points (rate in KBPI, quality), kept sorted by rate."""

    points: tuple

    def __post_init__(self) -> None:
        pts = tuple((float(r), float(q)) for r, q in self.points)
        if not pts:
            raise ValueError("curve needs at least one point")
        for r, q in pts:
            if not (math.isfinite(r) and math.isfinite(q)):
                raise ValueError("non-finite curve point")
            if r <= 0:
                raise ValueError(f"rate must be positive, got {r}")
        object.__setattr__(self, "points", tuple(sorted(pts)))

    def rates(self) -> np.ndarray:
        return np.array([r for r, _ in self.points])

    def qualities(self) -> np.ndarray:
        return np.array([q for _, q in self.points])


def _fit_log_rate(curve: RDCurve) -> np.ndarray:
    q = curve.qualities()
    if len(q) < 4:
        raise CurveError(f"need >= 4 points, got {len(q)}")
    if len(np.unique(q)) != len(q):
        raise CurveError("duplicate quality values make the fit degenerate")
    return np.polyfit(q, np.log10(curve.rates()), 3)


def bd_delta_rate(reference: RDCurve, test: RDCurve) -> float:
    """Average rate difference of ``test`` vs ``reference`` in percent.

    Negative values mean the test curve spends less rate for the same
    quality over the overlapping quality interval.
    """
    fit_ref = _fit_log_rate(reference)
    fit_test = _fit_log_rate(test)
    lo = max(reference.qualities().min(), test.qualities().min())
    hi = min(reference.qualities().max(), test.qualities().max())
    if hi <= lo:
        raise CurveError(f"quality ranges do not overlap: [{lo}, {hi}]")
    int_ref = np.polyval(np.polyint(fit_ref), hi) - np.polyval(np.polyint(fit_ref), lo)
    int_test = np.polyval(np.polyint(fit_test), hi) - np.polyval(np.polyint(fit_test), lo)
    avg_log_diff = (int_test - int_ref) / (hi - lo)
    return float((10.0 ** avg_log_diff - 1.0) * 100.0)


def write_rd_csv(curve: RDCurve, sink) -> None:
    """CSV with header ``quality,kbpi``, one operating point per row."""
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(["quality", "kbpi"])
    for rate, quality in curve.points:
        writer.writerow([repr(quality), repr(rate)])


def read_rd_csv(source) -> RDCurve:
    reader = csv.reader(source)
    header = next(reader, None)
    if header is None or [h.strip() for h in header] != ["quality", "kbpi"]:
        raise CurveError(f"expected header 'quality,kbpi', got {header}")
    points = []
    for row in reader:
        if not row:
            continue
        if len(row) != 2:
            raise CurveError(f"malformed row {row}")
        quality, rate = float(row[0]), float(row[1])
        points.append((rate, quality))
    if not points:
        raise CurveError("curve file has no points")
    return RDCurve(points=tuple(points))
