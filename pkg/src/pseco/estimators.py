"""Estimator-style wrappers around the training loops so the detector
composes with scikit-learn tooling (get_params/set_params, clone)."""

from __future__ import annotations

from sklearn.base import BaseEstimator

from .config import TrainConfig
from .simulator import (
    NOISE_PRESETS,
    Dataset,
    detections_from_preds,
    gen_proposals,
    train_pseco,
    train_supervised,
)
from .model import detector_forward

import numpy as np


class _DetectorBase(BaseEstimator):
    def __init__(self, tau=0.5, beta=4.0, alpha=0.5, t_bag=0.4,
                 pos_threshold=0.5, ema_momentum=0.999, burn_in_steps=500,
                 unlabeled_ratio=4, unsup_reg="pcv", use_v2=True,
                 feat_consistency_weight=0.0, lr=0.5, steps=1000, seed=0,
                 noise_preset="coco-like"):
        self.tau = tau
        self.beta = beta
        self.alpha = alpha
        self.t_bag = t_bag
        self.pos_threshold = pos_threshold
        self.ema_momentum = ema_momentum
        self.burn_in_steps = burn_in_steps
        self.unlabeled_ratio = unlabeled_ratio
        self.unsup_reg = unsup_reg
        self.use_v2 = use_v2
        self.feat_consistency_weight = feat_consistency_weight
        self.lr = lr
        self.steps = steps
        self.seed = seed
        self.noise_preset = noise_preset

    def _config(self) -> TrainConfig:
        return TrainConfig(
            tau=self.tau, beta=self.beta, alpha=self.alpha, t_bag=self.t_bag,
            pos_threshold=self.pos_threshold, ema_momentum=self.ema_momentum,
            burn_in_steps=self.burn_in_steps,
            unlabeled_ratio=self.unlabeled_ratio, unsup_reg=self.unsup_reg,
            use_v2=self.use_v2,
            feat_consistency_weight=self.feat_consistency_weight,
            lr=self.lr, steps=self.steps, seed=self.seed,
            noise_preset=self.noise_preset,
        )

    _train = None  # set by subclasses

    def fit(self, X: Dataset, y=None):
        """Train on a Dataset; stores the teacher parameters for predict."""
        result = type(self)._train(self._config(), X)
        self.result_ = result
        self.params_ = result.teacher
        self.n_categories_ = X.n_categories
        self.final_map_ = result.final_map
        return self

    def predict(self, X: Dataset):
        """Per-scene detections from the fitted teacher."""
        if not hasattr(self, "params_"):
            raise RuntimeError("estimator is not fitted")
        noise = NOISE_PRESETS[self.noise_preset]
        rng = np.random.default_rng(self.seed)
        out = []
        for scene in X.scenes:
            props = gen_proposals(scene, noise, rng, self.n_categories_)
            preds = detector_forward(self.params_, props)
            out.append(detections_from_preds(props, preds, 0.05, 0.5))
        return out

    def score(self, X: Dataset, y=None) -> float:
        from .simulator import evaluate_map

        return evaluate_map(
            self.params_, X, NOISE_PRESETS[self.noise_preset], seed=self.seed
        )


class SupervisedDetector(_DetectorBase):
    """Labeled-scenes-only baseline trainer."""

    _train = staticmethod(train_supervised)


class PseCoDetector(_DetectorBase):
    """Full semi-supervised trainer: pseudo labeling, prediction-guided
    assignment, consistency-weighted regression, multi-view learning."""

    _train = staticmethod(train_pseco)
