"""Training objectives: binary focal classification loss with its analytic
logit gradient, the sigma-weighted L1 regression loss, and the
supervised/total loss combinations."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

P_CLAMP_EPS = 1e-7


@dataclass(frozen=True)
class FocalParams:
    alpha_t: float = 0.25
    gamma: float = 2.0

    def __post_init__(self):
        if not 0.0 <= self.alpha_t <= 1.0:
            raise ValueError(f"alpha_t {self.alpha_t} outside [0, 1]")
        if self.gamma < 0:
            raise ValueError(f"gamma {self.gamma} must be non-negative")


def focal_loss(
    p: float, y: int, params: FocalParams = FocalParams()
) -> tuple[float, float]:
    """Binary focal loss and its derivative with respect to the logit.

    `p` is the sigmoid probability for the positive class; `y` is 0 or 1.
    The weight alpha_t applies as alpha for positives and (1 - alpha) for
    negatives. Probabilities at exactly 0 or 1 are clamped to
    [eps, 1 - eps] with a warning.
    """
    if y not in (0, 1):
        raise ValueError(f"label must be 0 or 1, got {y}")
    if p <= 0.0 or p >= 1.0:
        warnings.warn(
            f"probability {p} clamped to ({P_CLAMP_EPS}, {1 - P_CLAMP_EPS})",
            RuntimeWarning,
            stacklevel=2,
        )
        p = min(max(p, P_CLAMP_EPS), 1.0 - P_CLAMP_EPS)
    a = params.alpha_t if y == 1 else 1.0 - params.alpha_t
    g = params.gamma
    p_t = p if y == 1 else 1.0 - p
    one_m = 1.0 - p_t
    loss = -a * one_m**g * math.log(p_t)
    # dL/dp_t, then chain through p_t = p or 1-p and p = sigmoid(z)
    if g == 0.0:
        dl_dpt = -a / p_t
    else:
        dl_dpt = a * g * one_m ** (g - 1.0) * math.log(p_t) - a * one_m**g / p_t
    dpt_dz = p * (1.0 - p) * (1.0 if y == 1 else -1.0)
    return loss, dl_dpt * dpt_dz


def focal_loss_array(
    p: np.ndarray, y: np.ndarray, params: FocalParams = FocalParams()
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized focal_loss over probability/label arrays of equal shape.

    Agrees elementwise with the scalar form; used by the training loop.
    """
    p = np.clip(np.asarray(p, dtype=float), P_CLAMP_EPS, 1.0 - P_CLAMP_EPS)
    y = np.asarray(y)
    a = np.where(y == 1, params.alpha_t, 1.0 - params.alpha_t)
    g = params.gamma
    p_t = np.where(y == 1, p, 1.0 - p)
    one_m = 1.0 - p_t
    log_pt = np.log(p_t)
    loss = -a * one_m**g * log_pt
    if g == 0.0:
        dl_dpt = -a / p_t
    else:
        dl_dpt = a * g * one_m ** (g - 1.0) * log_pt - a * one_m**g / p_t
    dpt_dz = p * (1.0 - p) * np.where(y == 1, 1.0, -1.0)
    return loss, dl_dpt * dpt_dz


def weighted_l1_reg(
    preds: np.ndarray,
    targets: np.ndarray,
    sigmas: Sequence[Optional[float]],
    groups: Sequence[int],
) -> float:
    """Consistency-weighted L1 regression loss over positives.

    `preds` and `targets` are (P, 4) regression coordinates, `groups[i]`
    names the gt of positive i, and `sigmas[j]` is gt j's weight (None for
    gts excluded from regression). Per gt the coordinate residuals are
    summed and divided by that gt's positive count N_j; the weighted sum is
    then divided by the number of weighted gts M.
    """
    preds = np.asarray(preds, dtype=float).reshape(-1, 4)
    targets = np.asarray(targets, dtype=float).reshape(-1, 4)
    if preds.shape != targets.shape or preds.shape[0] != len(groups):
        raise ValueError("preds, targets and groups disagree on positive count")
    for i, j in enumerate(groups):
        if not 0 <= j < len(sigmas):
            raise ValueError(f"positive {i} references missing gt {j}")
        if sigmas[j] is None:
            raise ValueError(f"positive {i} references sigma-absent gt {j}")
    m = sum(1 for s in sigmas if s is not None)
    if m == 0:
        return 0.0
    total = 0.0
    for j, sigma in enumerate(sigmas):
        if sigma is None:
            continue
        rows = [i for i, g in enumerate(groups) if g == j]
        if not rows:
            continue
        resid = np.abs(preds[rows] - targets[rows]).sum()
        total += sigma * resid / len(rows)
    return total / m


def supervised_loss(cls: float, reg: float) -> float:
    return cls + reg


def total_loss(sup: float, unsup: float, beta: float) -> float:
    if beta < 0:
        raise ValueError(f"beta {beta} must be non-negative")
    return sup + beta * unsup


@dataclass
class LossReport:
    cls_sup: float
    reg_sup: float
    cls_unsup: float
    reg_unsup: float
    feat_consistency: float
    beta: float
    total: float = field(init=False)

    def __post_init__(self):
        self.total = total_loss(
            supervised_loss(self.cls_sup, self.reg_sup),
            self.cls_unsup + self.reg_unsup + self.feat_consistency,
            self.beta,
        )
