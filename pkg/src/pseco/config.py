"""Run configuration: all training hyperparameters, with strict-schema TOML
loading so typos fail loudly instead of silently using defaults."""

from __future__ import annotations

import dataclasses

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from dataclasses import dataclass
from pathlib import Path


class ConfigError(ValueError):
    """Bad configuration file or out-of-range hyperparameter."""


@dataclass
class TrainConfig:
    tau: float = 0.5
    beta: float = 4.0
    alpha: float = 0.5
    t_bag: float = 0.4
    pos_threshold: float = 0.5
    ema_momentum: float = 0.999
    burn_in_steps: int = 500
    unlabeled_ratio: int = 4
    resize_range: tuple[float, float] = (0.8, 1.3)
    downsample_factor: int = 2
    unsup_reg: str = "pcv"  # "off" | "pcv"
    feat_consistency_weight: float = 0.0
    use_v2: bool = True
    lr: float = 0.5
    steps: int = 1000
    seed: int = 0
    noise_preset: str = "coco-like"
    nms_iou: float = 0.5
    det_score_floor: float = 0.05
    eval_every: int = 100

    def __post_init__(self):
        self.resize_range = tuple(self.resize_range)
        unit = {
            "tau": self.tau,
            "alpha": self.alpha,
            "ema_momentum": self.ema_momentum,
            "nms_iou": self.nms_iou,
        }
        for name, v in unit.items():
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name}={v} outside [0, 1]")
        for name, v in (("t_bag", self.t_bag), ("pos_threshold", self.pos_threshold)):
            if not 0.0 < v < 1.0:
                raise ConfigError(f"{name}={v} outside (0, 1)")
        if self.beta < 0 or self.feat_consistency_weight < 0:
            raise ConfigError("beta and feat_consistency_weight must be non-negative")
        if self.burn_in_steps < 0 or self.steps < 0:
            raise ConfigError("step counts must be non-negative")
        if self.unlabeled_ratio < 1:
            raise ConfigError(f"unlabeled_ratio={self.unlabeled_ratio} must be >= 1")
        lo, hi = self.resize_range
        if not 0 < lo <= hi:
            raise ConfigError(f"invalid resize_range {self.resize_range}")
        if self.downsample_factor < 2 or self.downsample_factor % 2 != 0:
            raise ConfigError(
                f"downsample_factor={self.downsample_factor} must be even and >= 2"
            )
        if self.unsup_reg not in ("off", "pcv"):
            raise ConfigError(f"unsup_reg={self.unsup_reg!r} not in {{off, pcv}}")
        if self.lr <= 0:
            raise ConfigError(f"lr={self.lr} must be positive")
        if self.eval_every < 1:
            raise ConfigError("eval_every must be >= 1")


_FIELD_NAMES = {f.name for f in dataclasses.fields(TrainConfig)}


def load_config(path: str | Path) -> TrainConfig:
    """Load a TOML config; unknown keys are an error."""
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)
    unknown = set(raw) - _FIELD_NAMES
    if unknown:
        raise ConfigError(f"unknown config fields: {sorted(unknown)}")
    try:
        return TrainConfig(**raw)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
