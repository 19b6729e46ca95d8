"""Desk-scale semi-supervised object detection sandbox.

Implements pseudo labeling, prediction-guided label assignment,
positive-proposal consistency voting, and multi-view scale-invariant
learning over a synthetic two-stage detection head, with a CLI for
training, evaluation, and diagnostics.
"""

from .geometry import BBox, iou, iou_matrix, nms, transform_box
from .pseudo_labels import (
    Detection,
    PseudoLabel,
    generate_pseudo_labels,
    pseudo_precision_curve,
)
from .assignment import (
    AssignmentResult,
    candidate_bag,
    dynamic_k,
    iou_assign,
    pla_assign,
    proposal_quality,
)
from .pcv import ConsistencyScore, attach_sigma, consistency_vote
from .losses import (
    FocalParams,
    LossReport,
    focal_loss,
    supervised_loss,
    total_loss,
    weighted_l1_reg,
)
from .msl import (
    FeaturePyramid,
    ViewSpec,
    align_pyramids,
    feature_consistency_loss,
    fpn_level,
    make_views,
    sample_resize_ratio,
)
from .model import DetectorParams, Prediction, detector_forward, ema_update, sgd_step
from .simulator import (
    Dataset,
    NoiseConfig,
    NOISE_PRESETS,
    Proposal,
    Scene,
    gen_dataset,
    gen_proposals,
    train_pseco,
    train_supervised,
)
from .eval_metrics import APResult, average_precision, assignment_quality, pearson
from .config import ConfigError, TrainConfig, load_config
from .estimators import PseCoDetector, SupervisedDetector

__version__ = "0.1.0"
