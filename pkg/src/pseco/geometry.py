"""Axis-aligned box arithmetic: IoU, pairwise IoU, NMS, and view transforms.

Boxes use the continuous corner convention (x1, y1, x2, y2) with
area = (x2 - x1) * (y2 - y1). All functions here are pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np


class InvalidBoxError(ValueError):
    """Raised for degenerate or non-finite boxes."""


@dataclass(frozen=True)
class BBox:
    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self):
        for v in (self.x1, self.y1, self.x2, self.y2):
            if not math.isfinite(v):
                raise InvalidBoxError(f"non-finite coordinate in {self!r}")
        if self.x2 <= self.x1 or self.y2 <= self.y1:
            raise InvalidBoxError(
                f"degenerate box ({self.x1}, {self.y1}, {self.x2}, {self.y2})"
            )

    @property
    def area(self) -> float:
        return (self.x2 - self.x1) * (self.y2 - self.y1)

    @property
    def width(self) -> float:
        return self.x2 - self.x1

    @property
    def height(self) -> float:
        return self.y2 - self.y1

    @property
    def center(self) -> tuple[float, float]:
        return (0.5 * (self.x1 + self.x2), 0.5 * (self.y1 + self.y2))

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x1, self.y1, self.x2, self.y2)


def iou(a: BBox, b: BBox) -> float:
    """Intersection over union of two boxes; 0 when disjoint."""
    ix1 = max(a.x1, b.x1)
    iy1 = max(a.y1, b.y1)
    ix2 = min(a.x2, b.x2)
    iy2 = min(a.y2, b.y2)
    iw = ix2 - ix1
    ih = iy2 - iy1
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    union = a.area + b.area - inter
    return inter / union


def boxes_to_array(boxes: Sequence[BBox]) -> np.ndarray:
    """Stack boxes into an (N, 4) float array; (0, 4) for empty input."""
    if len(boxes) == 0:
        return np.zeros((0, 4), dtype=float)
    return np.array([b.as_tuple() for b in boxes], dtype=float)


def iou_matrix(A: Sequence[BBox], B: Sequence[BBox]) -> np.ndarray:
    """Pairwise IoU matrix of shape (|A|, |B|)."""
    a = boxes_to_array(A)
    b = boxes_to_array(B)
    if a.shape[0] == 0 or b.shape[0] == 0:
        return np.zeros((a.shape[0], b.shape[0]), dtype=float)
    lt = np.maximum(a[:, None, :2], b[None, :, :2])
    rb = np.minimum(a[:, None, 2:], b[None, :, 2:])
    wh = np.clip(rb - lt, 0.0, None)
    inter = wh[..., 0] * wh[..., 1]
    area_a = (a[:, 2] - a[:, 0]) * (a[:, 3] - a[:, 1])
    area_b = (b[:, 2] - b[:, 0]) * (b[:, 3] - b[:, 1])
    union = area_a[:, None] + area_b[None, :] - inter
    return inter / union


def nms(
    boxes: Sequence[BBox],
    scores: Sequence[float],
    iou_threshold: float = 0.5,
) -> list[int]:
    """Greedy non-maximum suppression.

    Returns kept indices in descending score order; score ties keep the
    lower original index first. Boxes with IoU >= iou_threshold against an
    already-kept box are suppressed.
    """
    if len(boxes) != len(scores):
        raise ValueError(
            f"got {len(boxes)} boxes but {len(scores)} scores"
        )
    order = sorted(range(len(boxes)), key=lambda i: (-scores[i], i))
    kept: list[int] = []
    for i in order:
        if all(iou(boxes[i], boxes[j]) < iou_threshold for j in kept):
            kept.append(i)
    return kept


def transform_box(
    b: BBox,
    scale: float,
    hflip: bool = False,
    image_width: float = 0.0,
) -> BBox:
    """Scale a box, optionally mirroring it horizontally first.

    The flip maps x -> image_width - x in the input frame, then all
    coordinates are multiplied by `scale`.
    """
    if scale <= 0:
        raise ValueError(f"scale must be positive, got {scale}")
    x1, y1, x2, y2 = b.as_tuple()
    if hflip:
        x1, x2 = image_width - x2, image_width - x1
    return BBox(x1 * scale, y1 * scale, x2 * scale, y2 * scale)
