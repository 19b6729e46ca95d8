"""Pseudo-label generation from raw teacher detections, plus precision
diagnostics comparing pseudo boxes against ground truth at a sweep of IoU
thresholds."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

from .geometry import BBox, iou, nms


@dataclass(frozen=True)
class Detection:
    box: BBox
    category_id: int
    score: float

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score {self.score} outside [0, 1]")
        if self.category_id < 0:
            raise ValueError(f"negative category_id {self.category_id}")


@dataclass(frozen=True)
class PseudoLabel:
    box: BBox
    category_id: int
    score: float
    sigma: Optional[float] = None

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score {self.score} outside [0, 1]")
        if self.sigma is not None and not 0.0 <= self.sigma <= 1.0:
            raise ValueError(f"sigma {self.sigma} outside [0, 1]")


def generate_pseudo_labels(
    dets: Sequence[Detection],
    tau: float,
    nms_iou: float = 0.5,
) -> list[PseudoLabel]:
    """Per-category NMS followed by score thresholding at `tau`.

    Survivors are returned score-descending (ties keep lower input index).
    The consistency weight sigma is left unset.
    """
    kept: list[Detection] = []
    for cat in sorted({d.category_id for d in dets}):
        idxs = [i for i, d in enumerate(dets) if d.category_id == cat]
        boxes = [dets[i].box for i in idxs]
        scores = [dets[i].score for i in idxs]
        kept.extend(dets[idxs[k]] for k in nms(boxes, scores, nms_iou))
    kept = [d for d in kept if d.score >= tau]
    kept.sort(key=lambda d: -d.score)
    return [PseudoLabel(d.box, d.category_id, d.score) for d in kept]


class PrecisionCurve(NamedTuple):
    points: list[tuple[float, float]]
    no_pseudo_labels: bool


def _greedy_match_ious(
    pseudo: Sequence[PseudoLabel],
    gts: Sequence[tuple[BBox, int]],
) -> list[float]:
    """One-to-one greedy matching by descending IoU within category.

    Returns the matched IoU per pseudo label (0.0 when unmatched).
    """
    pairs = []
    for i, p in enumerate(pseudo):
        for j, (gbox, gcat) in enumerate(gts):
            if p.category_id != gcat:
                continue
            v = iou(p.box, gbox)
            if v > 0:
                pairs.append((v, i, j))
    pairs.sort(key=lambda t: (-t[0], t[1], t[2]))
    matched_iou = [0.0] * len(pseudo)
    used_p: set[int] = set()
    used_g: set[int] = set()
    for v, i, j in pairs:
        if i in used_p or j in used_g:
            continue
        used_p.add(i)
        used_g.add(j)
        matched_iou[i] = v
    return matched_iou


def pseudo_precision_curve(
    pseudo: Sequence[PseudoLabel],
    gts: Sequence[tuple[BBox, int]],
    iou_thresholds: Sequence[float],
) -> PrecisionCurve:
    """Precision of pseudo boxes at each IoU threshold.

    A pseudo label counts as correct at threshold T when its one-to-one
    greedy match (same category, descending IoU) has IoU >= T. The curve is
    non-increasing in T by construction since the matching is computed once.
    """
    thr = list(iou_thresholds)
    if any(b <= a for a, b in zip(thr, thr[1:])):
        raise ValueError("iou_thresholds must be strictly increasing")
    if not pseudo:
        return PrecisionCurve([(t, 0.0) for t in thr], no_pseudo_labels=True)
    matched = _greedy_match_ious(pseudo, gts)
    points = [
        (t, sum(1 for v in matched if v >= t) / len(pseudo)) for t in thr
    ]
    return PrecisionCurve(points, no_pseudo_labels=False)
