"""Multi-view scale-invariant learning machinery.

View V1 is a random resize of the input (label-level consistency); V2 is
V1 downsampled by an even factor (feature-level consistency). Because
adjacent pyramid levels differ by 2x, levels P3..P7 of V1 align spatially
with P2..P6 of V2, and a mean-squared agreement loss can be taken over the
aligned pairs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .geometry import BBox, transform_box

MIN_VIEW_BOX_AREA = 1e-3


@dataclass(frozen=True)
class ViewSpec:
    resize_ratio: float = 1.0
    downsample_factor: int = 2
    hflip: bool = False

    def __post_init__(self):
        if self.resize_ratio <= 0:
            raise ValueError(f"resize_ratio {self.resize_ratio} must be positive")
        if self.downsample_factor < 2 or self.downsample_factor % 2 != 0:
            raise ValueError(
                f"downsample_factor {self.downsample_factor} must be a positive even integer"
            )


@dataclass(frozen=True)
class View:
    width: float
    height: float
    boxes: tuple[BBox, ...]
    n_dropped: int = 0


@dataclass
class FeaturePyramid:
    """Ordered map of level index -> (H, W, C) grid, levels halving in size."""

    levels: dict[int, np.ndarray]

    def __post_init__(self):
        idxs = sorted(self.levels)
        if not idxs:
            raise ValueError("pyramid has no levels")
        c = self.levels[idxs[0]].shape[2]
        for a, b in zip(idxs, idxs[1:]):
            ha, wa, ca = self.levels[a].shape
            hb, wb, cb = self.levels[b].shape
            if b == a + 1 and (hb != math.ceil(ha / 2) or wb != math.ceil(wa / 2)):
                raise ValueError(
                    f"level {b} shape ({hb}, {wb}) is not half of level {a} ({ha}, {wa})"
                )
            if cb != c:
                raise ValueError("channel count varies across levels")


def sample_resize_ratio(rng: np.random.Generator, lo: float, hi: float) -> float:
    """Uniform resize ratio in [lo, hi]."""
    if not 0 < lo <= hi:
        raise ValueError(f"invalid resize range [{lo}, {hi}]")
    return float(rng.uniform(lo, hi))


def make_views(
    image_dims: tuple[float, float],
    boxes: Sequence[BBox],
    spec: ViewSpec,
) -> tuple[View, View]:
    """Build (V1, V2) from the input image dims and boxes.

    V1 scales everything by resize_ratio (with optional horizontal flip);
    V2 is V1 divided by the downsample factor exactly. Boxes that collapse
    below MIN_VIEW_BOX_AREA after scaling are dropped and counted.
    """
    w, h = image_dims
    r = spec.resize_ratio
    df = spec.downsample_factor

    v1_boxes, d1 = [], 0
    for b in boxes:
        tb = transform_box(b, r, hflip=spec.hflip, image_width=w)
        if tb.area < MIN_VIEW_BOX_AREA:
            d1 += 1
        else:
            v1_boxes.append(tb)
    # derive V2 from V1 so the /df relation between the views is exact
    v2_boxes, d2 = [], 0
    for b in v1_boxes:
        tb = transform_box(b, 1.0 / df)
        if tb.area < MIN_VIEW_BOX_AREA:
            d2 += 1
        else:
            v2_boxes.append(tb)
    v1 = View(w * r, h * r, tuple(v1_boxes), d1)
    v2 = View(w * r / df, h * r / df, tuple(v2_boxes), d1 + d2)
    return v1, v2


def fpn_level(
    box: BBox,
    k0: int = 4,
    s0: float = 224.0,
    level_min: int = 2,
    level_max: int = 6,
) -> int:
    """Pyramid level for a box: floor(k0 + log2(sqrt(area) / s0)), clamped."""
    level = math.floor(k0 + math.log2(math.sqrt(box.area) / s0))
    return int(min(max(level, level_min), level_max))


def build_pyramid(
    width: float,
    height: float,
    boxes: Sequence[BBox],
    levels: Sequence[int] = range(2, 8),
    channels: int = 4,
) -> FeaturePyramid:
    """Deterministic synthetic pyramid from scene content.

    Each cell integrates, over the boxes' *normalized* coordinates, the
    covered cell fraction weighted per channel by 1, normalized box area,
    and normalized center coordinates. Values therefore depend only on the
    normalized content and the grid shape, so views with identical content
    and matching grid shapes produce identical grids.
    """
    if channels != 4:
        raise ValueError("synthetic pyramid uses exactly 4 channels")
    norm = [
        (b.x1 / width, b.y1 / height, b.x2 / width, b.y2 / height)
        for b in boxes
    ]
    grids: dict[int, np.ndarray] = {}
    for lvl in levels:
        gh = math.ceil(height / 2**lvl)
        gw = math.ceil(width / 2**lvl)
        grid = np.zeros((gh, gw, channels))
        ys = np.linspace(0.0, 1.0, gh + 1)
        xs = np.linspace(0.0, 1.0, gw + 1)
        for x1, y1, x2, y2 in norm:
            ox = np.clip(np.minimum(xs[1:], x2) - np.maximum(xs[:-1], x1), 0, None)
            oy = np.clip(np.minimum(ys[1:], y2) - np.maximum(ys[:-1], y1), 0, None)
            frac = (oy[:, None] * ox[None, :]) * (gh * gw)  # fraction of each cell
            area = (x2 - x1) * (y2 - y1)
            cx, cy = 0.5 * (x1 + x2), 0.5 * (y1 + y2)
            grid[:, :, 0] += frac
            grid[:, :, 1] += frac * area
            grid[:, :, 2] += frac * cx
            grid[:, :, 3] += frac * cy
        grids[lvl] = grid
    return FeaturePyramid(grids)


def align_pyramids(
    p1: FeaturePyramid, p2: FeaturePyramid
) -> list[tuple[np.ndarray, np.ndarray]]:
    """Pair level l+1 of the full-size view with level l of the downsampled
    view; every pair must match in shape exactly."""
    pairs = []
    for lvl in sorted(p2.levels):
        if lvl + 1 not in p1.levels:
            continue
        a = p1.levels[lvl + 1]
        b = p2.levels[lvl]
        if a.shape != b.shape:
            raise ValueError(
                f"level P{lvl + 1} of V1 has shape {a.shape} but level "
                f"P{lvl} of V2 has shape {b.shape}; pyramids are not a 2x pair"
            )
        pairs.append((a, b))
    if not pairs:
        raise ValueError("pyramids share no alignable levels")
    return pairs


def feature_consistency_loss(
    pairs: Sequence[tuple[np.ndarray, np.ndarray]]
) -> float:
    """Mean squared elementwise difference averaged over the aligned pairs."""
    if not pairs:
        return 0.0
    return float(np.mean([np.mean((a - b) ** 2) for a, b in pairs]))
