"""Dataset-level diagnostics behind the analyze-* commands and the
assignment/consistency acceptance checks: pseudo-box precision sweeps,
consistency-vs-true-IoU pairs, and false-positive-rate comparison of the
two assigners."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .assignment import iou_assign, pla_assign
from .geometry import BBox, iou
from .model import DetectorParams, detector_forward
from .pcv import attach_sigma
from .pseudo_labels import (
    PseudoLabel,
    generate_pseudo_labels,
    pseudo_precision_curve,
)
from .simulator import (
    Dataset,
    NoiseConfig,
    Proposal,
    Scene,
    detections_from_preds,
    gen_proposals,
)


def scene_pseudo_labels(
    params: DetectorParams,
    scene: Scene,
    noise: NoiseConfig,
    rng: np.random.Generator,
    n_categories: int,
    tau: float = 0.5,
    nms_iou: float = 0.5,
    score_floor: float = 0.05,
) -> tuple[list[Proposal], list, list[PseudoLabel]]:
    """Teacher pipeline for one scene: proposals, dense predictions, and
    thresholded pseudo labels."""
    props = gen_proposals(scene, noise, rng, n_categories)
    preds = detector_forward(params, props)
    dets = detections_from_preds(props, preds, score_floor, nms_iou)
    return props, preds, generate_pseudo_labels(dets, tau, nms_iou)


def collect_precision_curve(
    params: DetectorParams,
    dataset: Dataset,
    noise: NoiseConfig,
    iou_thresholds: Sequence[float],
    seed: int = 0,
    tau: float = 0.5,
) -> list[tuple[float, float]]:
    """Pseudo-box precision at each IoU threshold, pooled over the dataset."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xD1A6]))
    pseudo_all, gts_all = [], []
    offset = 0.0
    for scene in dataset.scenes:
        _, _, pseudo = scene_pseudo_labels(
            params, scene, noise, rng, dataset.n_categories, tau
        )
        # shift each scene far apart so pooled matching stays per-scene
        shift = offset
        pseudo_all.extend(
            PseudoLabel(
                BBox(p.box.x1 + shift, p.box.y1, p.box.x2 + shift, p.box.y2),
                p.category_id,
                p.score,
            )
            for p in pseudo
        )
        gts_all.extend(
            (BBox(b.x1 + shift, b.y1, b.x2 + shift, b.y2), c)
            for b, c in scene.gts
        )
        offset += 10.0 * scene.image_dims[0]
    curve = pseudo_precision_curve(pseudo_all, gts_all, iou_thresholds)
    return curve.points


def collect_sigma_pairs(
    params: DetectorParams,
    dataset: Dataset,
    noise: NoiseConfig,
    seed: int = 0,
    tau: float = 0.5,
    t_bag: float = 0.4,
    alpha: float = 0.5,
) -> list[tuple[float, float]]:
    """(sigma, true IoU) per pseudo box with at least one positive."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x516A]))
    pairs = []
    for scene in dataset.scenes:
        props, preds, pseudo = scene_pseudo_labels(
            params, scene, noise, rng, dataset.n_categories, tau
        )
        if not pseudo:
            continue
        assignment = pla_assign([p.box for p in props], preds, pseudo, t_bag, alpha)
        pseudo = attach_sigma(pseudo, assignment, preds)
        for pl in pseudo:
            if pl.sigma is None:
                continue
            same_cat = [b for b, c in scene.gts if c == pl.category_id]
            true_iou = max((iou(pl.box, b) for b in same_cat), default=0.0)
            pairs.append((pl.sigma, true_iou))
    return pairs


def compare_assignment_fp(
    params: DetectorParams,
    dataset: Dataset,
    noise: NoiseConfig,
    seed: int = 0,
    tau: float = 0.5,
    t_bag: float = 0.4,
    alpha: float = 0.5,
    pos_threshold: float = 0.5,
) -> tuple[float, float]:
    """(iou_assign FP rate, pla_assign FP rate) against latent ground truth,
    pooled over all scenes, with both assigners fed the same pseudo boxes."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xFA1E]))
    fp_iou = [0, 0]
    fp_pla = [0, 0]
    for scene in dataset.scenes:
        props, preds, pseudo = scene_pseudo_labels(
            params, scene, noise, rng, dataset.n_categories, tau
        )
        if not pseudo:
            continue
        boxes = [p.box for p in props]
        cats = [p.category_id for p in pseudo]
        a_iou = iou_assign(boxes, [p.box for p in pseudo], pos_threshold)
        a_pla = pla_assign(boxes, preds, pseudo, t_bag, alpha)
        for a, acc in ((a_iou, fp_iou), (a_pla, fp_pla)):
            pos = np.flatnonzero(a.positive_mask)
            for i in pos:
                cat_gts = [b for b, c in scene.gts if c == cats[a.labels[i]]]
                acc[1] += 1
                if all(iou(boxes[i], b) < 0.5 for b in cat_gts):
                    acc[0] += 1
    rate_iou = fp_iou[0] / fp_iou[1] if fp_iou[1] else 0.0
    rate_pla = fp_pla[0] / fp_pla[1] if fp_pla[1] else 0.0
    return rate_iou, rate_pla
