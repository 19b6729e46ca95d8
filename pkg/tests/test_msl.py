import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pseco.geometry import BBox
from pseco.msl import (
    FeaturePyramid,
    ViewSpec,
    align_pyramids,
    build_pyramid,
    feature_consistency_loss,
    fpn_level,
    make_views,
    sample_resize_ratio,
)

from conftest import random_box


class TestSampleResizeRatio:
    def test_degenerate_range(self):
        rng = np.random.default_rng(0)
        assert sample_resize_ratio(rng, 1.0, 1.0) == 1.0

    def test_uniform_law(self):
        rng = np.random.default_rng(1)
        samples = [sample_resize_ratio(rng, 0.8, 1.3) for _ in range(10**5)]
        assert abs(np.mean(samples) - 1.05) < 0.01
        assert min(samples) >= 0.8 and max(samples) <= 1.3

    def test_bad_range_rejected(self):
        rng = np.random.default_rng(0)
        with pytest.raises(ValueError):
            sample_resize_ratio(rng, 1.3, 0.8)


class TestMakeViews:
    def test_identity_ratio(self):
        boxes = [BBox(0, 0, 10, 10), BBox(20, 20, 40, 60)]
        v1, v2 = make_views((256, 256), boxes, ViewSpec(1.0, 2))
        assert list(v1.boxes) == boxes
        for b1, b2 in zip(v1.boxes, v2.boxes):
            assert b2.as_tuple() == tuple(c / 2 for c in b1.as_tuple())

    def test_resize_scaling(self):
        v1, _ = make_views((256, 256), [BBox(0, 0, 100, 100)], ViewSpec(1.3, 2))
        assert v1.boxes[0] == BBox(0, 0, 130, 130)

    @given(st.data())
    @settings(max_examples=100)
    def test_v2_exactly_half_of_v1(self, data):
        rng = np.random.default_rng(data.draw(st.integers(0, 10**6)))
        ratio = float(rng.uniform(0.8, 1.3))
        hflip = bool(rng.random() < 0.5)
        boxes = [random_box(rng, 0, 250) for _ in range(4)]
        v1, v2 = make_views((256, 256), boxes, ViewSpec(ratio, 2, hflip))
        assert len(v1.boxes) == len(v2.boxes)
        for b1, b2 in zip(v1.boxes, v2.boxes):
            # bit-exact halving, and the x2 round trip recovers V1 exactly
            assert b2.as_tuple() == tuple(c / 2 for c in b1.as_tuple())
            assert tuple(c * 2 for c in b2.as_tuple()) == b1.as_tuple()

    def test_view_dims_follow_ratio(self):
        v1, v2 = make_views((256, 200), [], ViewSpec(1.25, 2))
        assert (v1.width, v1.height) == (320.0, 250.0)
        assert (v2.width, v2.height) == (160.0, 125.0)

    def test_odd_downsample_factor_rejected(self):
        with pytest.raises(ValueError):
            ViewSpec(1.0, 3)


class TestFpnLevel:
    def test_reference_box(self):
        # 112x112 with s0=224: floor(4 + log2(0.5)) = 3
        assert fpn_level(BBox(0, 0, 112, 112)) == 3

    def test_s0_box_is_k0(self):
        assert fpn_level(BBox(0, 0, 224, 224)) == 4

    def test_clamping(self):
        assert fpn_level(BBox(0, 0, 1, 1)) == 2
        assert fpn_level(BBox(0, 0, 5000, 5000)) == 6

    def test_halving_shifts_level_down_one(self):
        """Exhaustive size grid away from the clamp boundaries."""
        sizes = np.geomspace(120, 1500, 200)
        checked = 0
        for s in sizes:
            full = BBox(0, 0, s, s)
            half = BBox(0, 0, s / 2, s / 2)
            if 2 < fpn_level(full) <= 6 and fpn_level(half) > 2:
                assert fpn_level(half) == fpn_level(full) - 1
                checked += 1
        assert checked > 50


class TestPyramids:
    def test_shape_halving_chain(self):
        p = build_pyramid(256, 256, [BBox(10, 10, 50, 50)])
        levels = sorted(p.levels)
        for a, b in zip(levels, levels[1:]):
            ha, wa = p.levels[a].shape[:2]
            hb, wb = p.levels[b].shape[:2]
            assert hb == math.ceil(ha / 2)
            assert wb == math.ceil(wa / 2)

    def test_alignment_shapes(self):
        # 256x256 V1: P3 is 32x32; 128x128 V2: P2 is 32x32
        p1 = build_pyramid(256, 256, [], levels=range(2, 8))
        p2 = build_pyramid(128, 128, [], levels=range(2, 7))
        assert p1.levels[3].shape == p2.levels[2].shape == (32, 32, 4)
        pairs = align_pyramids(p1, p2)
        assert len(pairs) == 5
        for a, b in pairs:
            assert a.shape == b.shape

    def test_misaligned_shapes_error_names_level(self):
        p1 = build_pyramid(256, 256, [], levels=range(2, 8))
        p2 = build_pyramid(100, 100, [], levels=range(2, 7))
        with pytest.raises(ValueError, match="level"):
            align_pyramids(p1, p2)

    def test_deterministic(self):
        boxes = [BBox(30, 40, 90, 120)]
        a = build_pyramid(256, 256, boxes)
        b = build_pyramid(256, 256, boxes)
        for lvl in a.levels:
            np.testing.assert_array_equal(a.levels[lvl], b.levels[lvl])


class TestFeatureConsistencyLoss:
    def test_identical_is_zero(self):
        g = np.random.default_rng(0).normal(size=(8, 8, 4))
        assert feature_consistency_loss([(g, g)]) == 0.0

    def test_constant_difference_closed_form(self):
        g = np.zeros((4, 4, 2))
        d = 0.7
        assert feature_consistency_loss([(g, g + d)]) == pytest.approx(d * d)

    def test_nonnegative(self):
        rng = np.random.default_rng(3)
        pairs = [(rng.normal(size=(4, 4, 2)), rng.normal(size=(4, 4, 2)))
                 for _ in range(3)]
        assert feature_consistency_loss(pairs) >= 0.0

    def test_empty_pairs(self):
        assert feature_consistency_loss([]) == 0.0
