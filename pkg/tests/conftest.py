"""Shared test helpers: random box generation and brute-force oracles."""
from __future__ import annotations

import numpy as np
from hypothesis import strategies as st

from pseco.geometry import BBox


def random_box(rng: np.random.Generator, lo: float = 0.0, hi: float = 100.0) -> BBox:
    x1, x2 = sorted(rng.uniform(lo, hi, size=2))
    y1, y2 = sorted(rng.uniform(lo, hi, size=2))
    return BBox(x1, y1, x2 + 1e-3, y2 + 1e-3)


def boxes_strategy(max_boxes: int = 10):
    coord = st.floats(0.0, 100.0, allow_nan=False, width=32)

    def to_box(vals):
        x1, x2 = sorted((vals[0], vals[1]))
        y1, y2 = sorted((vals[2], vals[3]))
        return BBox(x1, y1, x2 + 0.5, y2 + 0.5)

    box = st.tuples(coord, coord, coord, coord).map(to_box)
    return st.lists(box, min_size=1, max_size=max_boxes)


def oracle_iou(a: BBox, b: BBox) -> float:
    """Straight-from-the-definition IoU, written independently of geometry.py."""
    ix = max(0.0, min(a.x2, b.x2) - max(a.x1, b.x1))
    iy = max(0.0, min(a.y2, b.y2) - max(a.y1, b.y1))
    inter = ix * iy
    area_a = (a.x2 - a.x1) * (a.y2 - a.y1)
    area_b = (b.x2 - b.x1) * (b.y2 - b.y1)
    union = area_a + area_b - inter
    return inter / union if union > 0 else 0.0


def oracle_nms(boxes, scores, threshold):
    """O(n^2) greedy NMS oracle: repeatedly take the highest-scoring
    remaining box (lower index on ties), discard overlaps >= threshold."""
    remaining = list(range(len(boxes)))
    keep = []
    while remaining:
        best = min(remaining, key=lambda i: (-scores[i], i))
        keep.append(best)
        remaining = [
            i for i in remaining
            if i != best and oracle_iou(boxes[i], boxes[best]) < threshold
        ]
    return keep


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.line(line)
