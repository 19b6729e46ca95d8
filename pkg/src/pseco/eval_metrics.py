"""Desk-scale evaluation: COCO-style average precision with 101-point
interpolation, Pearson correlation, and assignment-quality diagnostics."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from .assignment import AssignmentResult
from .geometry import BBox, iou
from .pseudo_labels import Detection

DEFAULT_IOU_THRESHOLDS = tuple(np.arange(0.5, 1.0, 0.05).round(2))


@dataclass
class APResult:
    per_threshold: dict[float, float]
    per_category: dict[int, float]
    mAP: float


def _category_ap(
    dets: Sequence[tuple[int, Detection]],  # (image_id, detection)
    gts: Mapping[int, list[BBox]],  # image_id -> gt boxes of this category
    thr: float,
) -> float:
    """AP for one category at one IoU threshold, 101-point interpolated."""
    n_gt = sum(len(v) for v in gts.values())
    order = sorted(range(len(dets)), key=lambda i: (-dets[i][1].score, i))
    matched: dict[int, set[int]] = {img: set() for img in gts}
    tp = np.zeros(len(order))
    fp = np.zeros(len(order))
    for rank, i in enumerate(order):
        img, det = dets[i]
        best_iou, best_j = 0.0, None
        for j, gbox in enumerate(gts.get(img, [])):
            if j in matched.get(img, set()):
                continue
            v = iou(det.box, gbox)
            if v >= thr and (best_j is None or v > best_iou):
                best_iou, best_j = v, j
        if best_j is not None:
            matched[img].add(best_j)
            tp[rank] = 1
        else:
            fp[rank] = 1
    if n_gt == 0:
        return 0.0
    tp_cum = np.cumsum(tp)
    fp_cum = np.cumsum(fp)
    recall = tp_cum / n_gt
    precision = tp_cum / np.maximum(tp_cum + fp_cum, 1e-12)
    # precision envelope, then sample at 101 recall points
    for i in range(len(precision) - 2, -1, -1):
        precision[i] = max(precision[i], precision[i + 1])
    ap = 0.0
    for r in np.linspace(0.0, 1.0, 101):
        idx = np.searchsorted(recall, r, side="left")
        ap += precision[idx] if idx < len(precision) else 0.0
    return ap / 101.0


def average_precision(
    dets: Mapping[int, Sequence[Detection]],
    gts: Mapping[int, Sequence[tuple[BBox, int]]],
    iou_thresholds: Sequence[float] = DEFAULT_IOU_THRESHOLDS,
) -> APResult:
    """COCO-style AP over a dataset keyed by image id.

    AP is computed per category and IoU threshold with greedy score-ordered
    matching, averaged over categories, then over thresholds for the mAP.
    Raises when the dataset contains no ground truth at all.
    """
    categories = sorted({c for anns in gts.values() for _, c in anns})
    if not categories:
        raise ValueError("cannot evaluate AP on a dataset with no ground truth")
    for t in iou_thresholds:
        if not 0.0 < t < 1.0:
            raise ValueError(f"IoU threshold {t} outside (0, 1)")
    ap_by_cat_thr: dict[int, dict[float, float]] = {}
    for cat in categories:
        cat_dets = [
            (img, d)
            for img, ds in sorted(dets.items())
            for d in ds
            if d.category_id == cat
        ]
        cat_gts = {
            img: [b for b, c in anns if c == cat] for img, anns in gts.items()
        }
        ap_by_cat_thr[cat] = {
            t: _category_ap(cat_dets, cat_gts, t) for t in iou_thresholds
        }
    per_threshold = {
        t: float(np.mean([ap_by_cat_thr[c][t] for c in categories]))
        for t in iou_thresholds
    }
    per_category = {
        c: float(np.mean(list(ap_by_cat_thr[c].values()))) for c in categories
    }
    return APResult(
        per_threshold=per_threshold,
        per_category=per_category,
        mAP=float(np.mean(list(per_threshold.values()))),
    )


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Pearson product-moment correlation coefficient."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.size < 2:
        raise ValueError("pearson needs two equal-length sequences of size >= 2")
    xc = x - x.mean()
    yc = y - y.mean()
    denom = np.sqrt((xc**2).sum() * (yc**2).sum())
    if denom == 0.0:
        raise ValueError("correlation undefined for constant input")
    return float(np.clip((xc * yc).sum() / denom, -1.0, 1.0))


def assignment_quality(
    assignment: AssignmentResult,
    proposals: Sequence[BBox],
    assigned_categories: Sequence[int],
    true_gts: Sequence[tuple[BBox, int]],
    iou_cut: float = 0.5,
) -> tuple[float, float]:
    """(false_positive_rate, false_negative_rate) against the latent truth.

    `assigned_categories[j]` is the category of assignment target j. A
    positive proposal is a false positive when its IoU with every true gt
    of its assigned category is below `iou_cut`. A proposal is a false
    negative when it covers some true gt at `iou_cut` but was labeled
    negative.
    """
    pos_idx = np.flatnonzero(assignment.positive_mask)
    fp = 0
    for i in pos_idx:
        cat = assigned_categories[assignment.labels[i]]
        cat_gts = [b for b, c in true_gts if c == cat]
        if all(iou(proposals[i], b) < iou_cut for b in cat_gts):
            fp += 1
    fp_rate = fp / len(pos_idx) if len(pos_idx) else 0.0

    should_pos = [
        i
        for i in range(len(proposals))
        if any(iou(proposals[i], b) >= iou_cut for b, _ in true_gts)
    ]
    fn = sum(1 for i in should_pos if not assignment.positive_mask[i])
    fn_rate = fn / len(should_pos) if should_pos else 0.0
    return fp_rate, fn_rate
