"""The toy two-stage detector head: a linear classification branch and a
linear box-regression branch over proposal feature vectors, with SGD and
EMA parameter updates.

Box regression uses the standard delta parameterization: center offsets
normalized by box size and log width/height ratios.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .geometry import BBox

# log-size deltas are clipped before exp() so a half-trained head cannot
# produce astronomically large boxes
DELTA_CLIP = 4.0


@dataclass(frozen=True)
class Prediction:
    category_probs: np.ndarray  # (K,) per-category sigmoid probabilities
    regressed_box: BBox
    deltas: np.ndarray  # (4,) raw regression output (dx, dy, dw, dh)


@dataclass
class DetectorParams:
    W_cls: np.ndarray  # (D, K)
    b_cls: np.ndarray  # (K,)
    W_reg: np.ndarray  # (D, 4)
    b_reg: np.ndarray  # (4,)

    def copy(self) -> "DetectorParams":
        return DetectorParams(
            self.W_cls.copy(), self.b_cls.copy(),
            self.W_reg.copy(), self.b_reg.copy(),
        )

    @property
    def feature_dim(self) -> int:
        return self.W_cls.shape[0]

    @property
    def n_categories(self) -> int:
        return self.W_cls.shape[1]

    def check_finite(self):
        for name in ("W_cls", "b_cls", "W_reg", "b_reg"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise FloatingPointError(f"non-finite values in {name}")


def zero_params(feature_dim: int, n_categories: int) -> DetectorParams:
    return DetectorParams(
        np.zeros((feature_dim, n_categories)),
        np.zeros(n_categories),
        np.zeros((feature_dim, 4)),
        np.zeros(4),
    )


def encode_deltas(proposal: BBox, target: BBox) -> np.ndarray:
    """Regression target taking `proposal` onto `target`."""
    px, py = proposal.center
    tx, ty = target.center
    return np.array([
        (tx - px) / proposal.width,
        (ty - py) / proposal.height,
        np.log(target.width / proposal.width),
        np.log(target.height / proposal.height),
    ])


def decode_deltas(proposal: BBox, deltas: np.ndarray) -> BBox:
    """Apply regression output `deltas` to `proposal`."""
    dx, dy, dw, dh = np.clip(deltas, -DELTA_CLIP, DELTA_CLIP)
    cx, cy = proposal.center
    cx += dx * proposal.width
    cy += dy * proposal.height
    w = proposal.width * np.exp(dw)
    h = proposal.height * np.exp(dh)
    return BBox(cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2)


def sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=float)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def detector_forward(params: DetectorParams, proposals) -> list[Prediction]:
    """Run the linear head on each proposal's feature vector."""
    preds = []
    for i, prop in enumerate(proposals):
        f = prop.feature
        if f.shape[0] != params.feature_dim:
            raise ValueError(
                f"proposal {i}: feature dim {f.shape[0]} != {params.feature_dim}"
            )
        logits = f @ params.W_cls + params.b_cls
        deltas = f @ params.W_reg + params.b_reg
        if not (np.all(np.isfinite(logits)) and np.all(np.isfinite(deltas))):
            raise FloatingPointError(f"non-finite head output at proposal {i}")
        preds.append(Prediction(sigmoid(logits), decode_deltas(prop.box, deltas), deltas))
    return preds


@dataclass
class ParamGrads:
    W_cls: np.ndarray
    b_cls: np.ndarray
    W_reg: np.ndarray
    b_reg: np.ndarray

    @staticmethod
    def zeros(feature_dim: int, n_categories: int) -> "ParamGrads":
        return ParamGrads(
            np.zeros((feature_dim, n_categories)),
            np.zeros(n_categories),
            np.zeros((feature_dim, 4)),
            np.zeros(4),
        )

    def add_scaled(self, other: "ParamGrads", scale: float):
        self.W_cls += scale * other.W_cls
        self.b_cls += scale * other.b_cls
        self.W_reg += scale * other.W_reg
        self.b_reg += scale * other.b_reg


def sgd_step(params: DetectorParams, grads: ParamGrads, lr: float) -> DetectorParams:
    """One plain gradient-descent update: params - lr * grads."""
    if lr < 0:
        raise ValueError(f"lr must be non-negative, got {lr}")
    for g in (grads.W_cls, grads.b_cls, grads.W_reg, grads.b_reg):
        if not np.all(np.isfinite(g)):
            raise FloatingPointError("non-finite gradient")
    return DetectorParams(
        params.W_cls - lr * grads.W_cls,
        params.b_cls - lr * grads.b_cls,
        params.W_reg - lr * grads.W_reg,
        params.b_reg - lr * grads.b_reg,
    )


def ema_update(teacher: DetectorParams, student: DetectorParams, momentum: float) -> DetectorParams:
    """Exponential moving average: momentum * teacher + (1 - momentum) * student."""
    if not 0.0 <= momentum <= 1.0:
        raise ValueError(f"momentum {momentum} outside [0, 1]")
    if teacher.W_cls.shape != student.W_cls.shape or teacher.W_reg.shape != student.W_reg.shape:
        raise ValueError("teacher/student parameter shapes differ")
    m = momentum
    return DetectorParams(
        m * teacher.W_cls + (1 - m) * student.W_cls,
        m * teacher.b_cls + (1 - m) * student.b_cls,
        m * teacher.W_reg + (1 - m) * student.W_reg,
        m * teacher.b_reg + (1 - m) * student.b_reg,
    )
