"""Label assignment for proposals.

Two assigners live here: the classic max-IoU rule, and the
prediction-guided rule that ranks an IoU-thresholded candidate bag by the
teacher's quality score q = s^alpha * u^(1-alpha) and keeps a dynamic-k
top subset as positives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .geometry import BBox, iou, iou_matrix
from .model import Prediction
from .pseudo_labels import PseudoLabel

NEGATIVE = -1
IGNORED = -2


@dataclass
class AssignmentResult:
    """Per-proposal labels: gt index when positive, NEGATIVE or IGNORED
    otherwise, plus the per-gt positive counts."""

    labels: np.ndarray  # (P,) int
    n_gts: int
    positive_counts: np.ndarray = field(init=False)

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=int)
        if np.any(self.labels >= self.n_gts):
            raise ValueError("positive label references a missing gt")
        counts = np.zeros(self.n_gts, dtype=int)
        for g in self.labels[self.labels >= 0]:
            counts[g] += 1
        self.positive_counts = counts

    def positives_for(self, gt_index: int) -> np.ndarray:
        return np.flatnonzero(self.labels == gt_index)

    @property
    def positive_mask(self) -> np.ndarray:
        return self.labels >= 0


def iou_assign(
    proposals: Sequence[BBox],
    gts: Sequence[BBox],
    pos_threshold: float = 0.5,
) -> AssignmentResult:
    """Max-IoU assignment: positive for the argmax gt when the best IoU
    reaches pos_threshold, negative otherwise."""
    if not 0.0 < pos_threshold < 1.0:
        raise ValueError(f"pos_threshold {pos_threshold} outside (0, 1)")
    labels = np.full(len(proposals), NEGATIVE, dtype=int)
    if gts:
        m = iou_matrix(proposals, gts)
        best = m.argmax(axis=1)
        hit = m[np.arange(len(proposals)), best] >= pos_threshold
        labels[hit] = best[hit]
    return AssignmentResult(labels, len(gts))


def candidate_bag(proposals: Sequence[BBox], gt: BBox, t: float) -> list[int]:
    """Indices of proposals whose IoU with `gt` reaches t."""
    if not 0.0 < t < 1.0:
        raise ValueError(f"bag threshold {t} outside (0, 1)")
    return [i for i, p in enumerate(proposals) if iou(p, gt) >= t]


def proposal_quality(s: float, u: float, alpha: float) -> float:
    """Quality q = s^alpha * u^(1-alpha), with 0^0 taken as 1."""
    for name, v in (("s", s), ("u", u), ("alpha", alpha)):
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"{name}={v} outside [0, 1]")
    def _pow(base, exp):
        return 1.0 if exp == 0.0 else base ** exp
    return _pow(s, alpha) * _pow(u, 1.0 - alpha)


def dynamic_k(bag_ious: Sequence[float], sum_top: Optional[int] = None) -> int:
    """Positive count for one gt: floor of the summed bag IoUs, clamped to
    [1, bag size].

    By default the whole bag is summed; `sum_top` restricts the sum to the
    largest `sum_top` IoUs (an alternative estimation rule, kept switchable).
    """
    if len(bag_ious) == 0:
        raise ValueError("dynamic_k requires a non-empty candidate bag")
    ious = sorted(bag_ious, reverse=True)
    if sum_top is not None:
        if sum_top < 1:
            raise ValueError("sum_top must be a positive integer")
        ious = ious[:sum_top]
    return int(min(max(math.floor(sum(ious)), 1), len(bag_ious)))


def pla_assign(
    proposals: Sequence[BBox],
    teacher_preds: Sequence[Prediction],
    pseudo_gts: Sequence[PseudoLabel],
    t: float = 0.4,
    alpha: float = 0.5,
) -> AssignmentResult:
    """Prediction-guided assignment over teacher-shared proposals.

    Per pseudo gt: collect the candidate bag at IoU threshold t, score each
    candidate by q from the teacher's foreground probability for the gt's
    category and the IoU of the teacher-regressed box with the gt, and keep
    the dynamic-k best as positives. A proposal winning in several bags goes
    to the gt where its q is highest (ties: lower gt index).
    """
    if len(proposals) != len(teacher_preds):
        raise ValueError(
            f"{len(proposals)} proposals but {len(teacher_preds)} predictions"
        )
    labels = np.full(len(proposals), NEGATIVE, dtype=int)
    best_q = np.full(len(proposals), -1.0)
    for j, gt in enumerate(pseudo_gts):
        bag = candidate_bag(proposals, gt.box, t)
        if not bag:
            continue
        bag_ious = [iou(proposals[i], gt.box) for i in bag]
        k = dynamic_k(bag_ious)
        qs = []
        for i in bag:
            s = float(teacher_preds[i].category_probs[gt.category_id])
            u = iou(teacher_preds[i].regressed_box, gt.box)
            qs.append(proposal_quality(s, u, alpha))
        ranked = sorted(range(len(bag)), key=lambda r: (-qs[r], bag[r]))
        for r in ranked[:k]:
            i = bag[r]
            if qs[r] > best_q[i]:
                best_q[i] = qs[r]
                labels[i] = j
    return AssignmentResult(labels, len(pseudo_gts))
