"""Positive-proposal consistency voting.

The localization quality of a pseudo box is estimated as the mean IoU
between that box and the regressed boxes of its positive proposals; the
estimate becomes the per-instance regression loss weight.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Sequence

from .assignment import AssignmentResult
from .geometry import BBox, iou
from .model import Prediction
from .pseudo_labels import PseudoLabel


@dataclass(frozen=True)
class ConsistencyScore:
    gt_index: int
    sigma: float
    n_positives: int


def consistency_vote(pred_boxes: Sequence[BBox], pseudo_box: BBox) -> float:
    """Mean IoU of the positive proposals' regressed boxes with the pseudo box."""
    if len(pred_boxes) == 0:
        raise ValueError("consistency_vote needs at least one predicted box")
    return sum(iou(b, pseudo_box) for b in pred_boxes) / len(pred_boxes)


def attach_sigma(
    pseudo_gts: Sequence[PseudoLabel],
    assignment: AssignmentResult,
    teacher_preds: Sequence[Prediction],
) -> list[PseudoLabel]:
    """Fill each pseudo label's sigma from its positives' regressed boxes.

    Pseudo gts with zero positives keep sigma=None and are meant to be
    excluded from regression by the caller.
    """
    if assignment.n_gts != len(pseudo_gts):
        raise ValueError(
            f"assignment covers {assignment.n_gts} gts, got {len(pseudo_gts)}"
        )
    if len(assignment.labels) != len(teacher_preds):
        raise ValueError(
            f"assignment covers {len(assignment.labels)} proposals, "
            f"got {len(teacher_preds)} predictions"
        )
    out = []
    for j, gt in enumerate(pseudo_gts):
        pos = assignment.positives_for(j)
        if len(pos) == 0:
            out.append(dataclasses.replace(gt, sigma=None))
            continue
        sigma = consistency_vote(
            [teacher_preds[i].regressed_box for i in pos], gt.box
        )
        out.append(dataclasses.replace(gt, sigma=sigma))
    return out
