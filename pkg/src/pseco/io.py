"""Persistence: the COCO-like dataset JSON schema, detector parameter
files, and the append-safe metrics CSV writer.

Schemas are strict: unknown fields and version mismatches are errors, so a
typo never silently becomes a default.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .geometry import BBox
from .model import DetectorParams
from .simulator import Dataset, Scene

SCHEMA_VERSION = 1

METRICS_HEADER = [
    "step",
    "loss_total",
    "loss_cls_sup",
    "loss_reg_sup",
    "loss_cls_unsup",
    "loss_reg_unsup",
    "loss_feat",
    "map",
    "fp_rate",
    "sigma_pearson",
]


class DataError(ValueError):
    """Malformed or mismatched data file."""


def _check_fields(obj: Mapping, allowed: set[str], ctx: str):
    unknown = set(obj) - allowed
    if unknown:
        raise DataError(f"unknown fields in {ctx}: {sorted(unknown)}")


def save_dataset(dataset: Dataset, path: str | Path):
    images, annotations = [], []
    ann_id = 0
    for i, scene in enumerate(dataset.scenes):
        images.append({
            "id": i,
            "width": scene.image_dims[0],
            "height": scene.image_dims[1],
            "split": "labeled" if scene.labeled else "unlabeled",
        })
        for box, cat in scene.gts:
            annotations.append({
                "id": ann_id,
                "image_id": i,
                "bbox": list(box.as_tuple()),
                "category_id": cat,
            })
            ann_id += 1
    doc = {
        "version": SCHEMA_VERSION,
        "images": images,
        "annotations": annotations,
        "categories": [
            {"id": k, "name": f"category_{k}"}
            for k in range(dataset.n_categories)
        ],
    }
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True))


def load_dataset(path: str | Path) -> Dataset:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read dataset {path}: {exc}") from exc
    _check_fields(doc, {"version", "images", "annotations", "categories"}, "dataset")
    if doc.get("version") != SCHEMA_VERSION:
        raise DataError(
            f"dataset schema version {doc.get('version')} != {SCHEMA_VERSION}; "
            "regenerate or migrate the file"
        )
    anns_by_image: dict[int, list] = {}
    for ann in doc["annotations"]:
        _check_fields(ann, {"id", "image_id", "bbox", "category_id"}, "annotation")
        anns_by_image.setdefault(ann["image_id"], []).append(ann)
    n_categories = len(doc["categories"])
    scenes = []
    for img in doc["images"]:
        _check_fields(img, {"id", "width", "height", "split"}, "image")
        if img["split"] not in ("labeled", "unlabeled"):
            raise DataError(f"image {img['id']}: bad split {img['split']!r}")
        gts = []
        for ann in anns_by_image.get(img["id"], []):
            x1, y1, x2, y2 = ann["bbox"]
            if not 0 <= ann["category_id"] < n_categories:
                raise DataError(f"annotation {ann['id']}: bad category")
            try:
                gts.append((BBox(x1, y1, x2, y2), ann["category_id"]))
            except ValueError as exc:
                raise DataError(f"annotation {ann['id']}: {exc}") from exc
        scenes.append(Scene(
            (img["width"], img["height"]), tuple(gts),
            labeled=img["split"] == "labeled",
        ))
    return Dataset(scenes, n_categories)


def save_params(params: DetectorParams, path: str | Path):
    doc = {
        "version": SCHEMA_VERSION,
        "W_cls": params.W_cls.tolist(),
        "b_cls": params.b_cls.tolist(),
        "W_reg": params.W_reg.tolist(),
        "b_reg": params.b_reg.tolist(),
    }
    Path(path).write_text(json.dumps(doc))


def load_params(path: str | Path) -> DetectorParams:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read params {path}: {exc}") from exc
    _check_fields(doc, {"version", "W_cls", "b_cls", "W_reg", "b_reg"}, "params")
    if doc.get("version") != SCHEMA_VERSION:
        raise DataError(f"params schema version {doc.get('version')} != {SCHEMA_VERSION}")
    return DetectorParams(
        np.array(doc["W_cls"], dtype=float),
        np.array(doc["b_cls"], dtype=float),
        np.array(doc["W_reg"], dtype=float),
        np.array(doc["b_reg"], dtype=float),
    )


def write_metrics(rows: Iterable[Mapping], path: str | Path):
    """Append metric rows, writing the header only when the file is new.
    Each row is flushed as it is written."""
    path = Path(path)
    new_file = not path.exists() or path.stat().st_size == 0
    with open(path, "a", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=METRICS_HEADER)
        if new_file:
            writer.writeheader()
        for row in rows:
            writer.writerow({k: row.get(k, "") for k in METRICS_HEADER})
            fh.flush()
