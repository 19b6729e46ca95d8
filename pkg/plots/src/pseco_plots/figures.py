"""Render figures from experiment CSVs.

Three figure kinds are supported, matched to the CSV schemas the training
and analysis commands write:

- ``precision_curve``: columns ``iou_threshold,precision``
- ``sigma_scatter``: columns ``sigma,true_iou``; the Pearson correlation
  coefficient of the two columns is annotated on the plot
- ``convergence``: training-metrics CSVs with ``step`` and ``map`` columns;
  several runs may be overlaid, one legend entry per input

Rendering is deterministic: the same inputs always produce byte-identical
output files, and input CSVs are never modified.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Sequence

import matplotlib
import numpy as np

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "pseco-plots"
# keep text as text in SVG output so labels and annotations stay searchable
matplotlib.rcParams["svg.fonttype"] = "none"

import matplotlib.pyplot as plt  # noqa: E402


class PlotDataError(ValueError):
    """Missing, empty, or wrongly shaped input CSV."""


def _read_columns(path: str | Path, columns: Sequence[str]) -> list[np.ndarray]:
    """Read the named numeric columns; empty or malformed files are errors."""
    path = Path(path)
    try:
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise PlotDataError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise PlotDataError(f"{path} has no data rows")
    out = []
    for col in columns:
        if col not in rows[0]:
            raise PlotDataError(
                f"{path} is missing column {col!r}; has {sorted(rows[0])}"
            )
        try:
            out.append(np.array([float(r[col]) for r in rows if r[col] != ""]))
        except ValueError as exc:
            raise PlotDataError(f"{path}, column {col!r}: {exc}") from exc
    if any(a.size == 0 for a in out):
        raise PlotDataError(f"{path} has no usable rows for {list(columns)}")
    return out


def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    if x.size < 2 or x.std() == 0 or y.std() == 0:
        raise PlotDataError("correlation needs >= 2 points with spread")
    return float(np.corrcoef(x, y)[0, 1])


def _save(fig, out: str | Path):
    out = Path(out)
    if out.suffix == ".svg":
        fig.savefig(out, metadata={"Date": None})
    else:
        fig.savefig(out)
    plt.close(fig)


def _labels(inputs: Sequence[str | Path], labels: Sequence[str] | None) -> list[str]:
    if labels:
        if len(labels) != len(inputs):
            raise PlotDataError(
                f"{len(labels)} labels for {len(inputs)} input files"
            )
        return list(labels)
    return [Path(p).stem for p in inputs]


def render_precision_curve(inputs, out, labels=None):
    labels = _labels(inputs, labels)
    fig, ax = plt.subplots(figsize=(5, 4))
    for path, label in zip(inputs, labels):
        thr, prec = _read_columns(path, ["iou_threshold", "precision"])
        order = np.argsort(thr)
        ax.plot(thr[order], prec[order], marker="o", label=label)
    ax.set_xlabel("IoU threshold")
    ax.set_ylabel("pseudo-box precision")
    ax.set_ylim(-0.02, 1.02)
    ax.grid(True, alpha=0.3)
    if len(inputs) > 1:
        ax.legend()
    fig.tight_layout()
    _save(fig, out)


def render_sigma_scatter(inputs, out, labels=None):
    if len(inputs) != 1:
        raise PlotDataError("sigma_scatter takes exactly one input CSV")
    sigma, true_iou = _read_columns(inputs[0], ["sigma", "true_iou"])
    r = _pearson(sigma, true_iou)
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.scatter(sigma, true_iou, s=8, alpha=0.4, edgecolors="none")
    ax.annotate(
        f"Pearson r = {r:.3f}",
        xy=(0.05, 0.95),
        xycoords="axes fraction",
        va="top",
        fontsize=11,
    )
    ax.set_xlabel("consistency sigma")
    ax.set_ylabel("true IoU")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    _save(fig, out)
    return r


def render_convergence(inputs, out, labels=None):
    labels = _labels(inputs, labels)
    fig, ax = plt.subplots(figsize=(5, 4))
    for path, label in zip(inputs, labels):
        step, map_ = _read_columns(path, ["step", "map"])
        order = np.argsort(step)
        ax.plot(step[order], map_[order], marker=".", label=label)
    ax.set_xlabel("training step")
    ax.set_ylabel("mAP")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    _save(fig, out)


FIGURE_KINDS = {
    "precision_curve": render_precision_curve,
    "sigma_scatter": render_sigma_scatter,
    "convergence": render_convergence,
}


def render(kind: str, inputs, out, labels=None):
    """Render one figure of the given kind from input CSVs to `out`."""
    if kind not in FIGURE_KINDS:
        raise PlotDataError(f"unknown figure kind {kind!r}; pick from {sorted(FIGURE_KINDS)}")
    if not inputs:
        raise PlotDataError("at least one input CSV is required")
    return FIGURE_KINDS[kind](inputs, out, labels)
