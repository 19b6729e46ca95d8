"""Round-trip and strictness tests for dataset/params persistence and the
metrics CSV writer."""

import json

import numpy as np
import pytest

from pseco.io import (
    METRICS_HEADER,
    DataError,
    load_dataset,
    load_params,
    save_dataset,
    save_params,
    write_metrics,
)
from pseco.simulator import gen_dataset
from pseco.model import zero_params


class TestDatasetRoundTrip:
    def test_round_trip_identity(self, tmp_path):
        ds = gen_dataset(11, 20, 4, 0.3)
        p = tmp_path / "ds.json"
        save_dataset(ds, p)
        back = load_dataset(p)
        assert back.n_categories == ds.n_categories
        assert len(back.scenes) == len(ds.scenes)
        for a, b in zip(ds.scenes, back.scenes):
            assert a.labeled == b.labeled
            assert a.image_dims == b.image_dims
            assert len(a.gts) == len(b.gts)
            for (ba, ca), (bb, cb) in zip(a.gts, b.gts):
                assert ca == cb
                assert ba.as_tuple() == pytest.approx(bb.as_tuple(), abs=1e-12)

    def test_empty_scene_dataset_round_trips(self, tmp_path):
        from pseco.simulator import Dataset, Scene

        ds = Dataset([Scene((640.0, 640.0), (), True)], 2)
        p = tmp_path / "ds.json"
        save_dataset(ds, p)
        back = load_dataset(p)
        assert back.scenes[0].gts == ()

    def test_unknown_top_level_field_rejected(self, tmp_path):
        ds = gen_dataset(0, 2, 2, 1.0)
        p = tmp_path / "ds.json"
        save_dataset(ds, p)
        doc = json.loads(p.read_text())
        doc["extra"] = 1
        p.write_text(json.dumps(doc))
        with pytest.raises(DataError, match="unknown fields"):
            load_dataset(p)

    def test_unknown_annotation_field_rejected(self, tmp_path):
        ds = gen_dataset(0, 2, 2, 1.0)
        p = tmp_path / "ds.json"
        save_dataset(ds, p)
        doc = json.loads(p.read_text())
        doc["annotations"][0]["surprise"] = True
        p.write_text(json.dumps(doc))
        with pytest.raises(DataError):
            load_dataset(p)

    def test_version_mismatch_rejected(self, tmp_path):
        ds = gen_dataset(0, 2, 2, 1.0)
        p = tmp_path / "ds.json"
        save_dataset(ds, p)
        doc = json.loads(p.read_text())
        doc["version"] = 999
        p.write_text(json.dumps(doc))
        with pytest.raises(DataError, match="version"):
            load_dataset(p)

    def test_bad_category_rejected(self, tmp_path):
        ds = gen_dataset(0, 2, 2, 1.0)
        p = tmp_path / "ds.json"
        save_dataset(ds, p)
        doc = json.loads(p.read_text())
        doc["annotations"][0]["category_id"] = 99
        p.write_text(json.dumps(doc))
        with pytest.raises(DataError, match="category"):
            load_dataset(p)

    def test_degenerate_bbox_rejected(self, tmp_path):
        ds = gen_dataset(0, 2, 2, 1.0)
        p = tmp_path / "ds.json"
        save_dataset(ds, p)
        doc = json.loads(p.read_text())
        doc["annotations"][0]["bbox"] = [10, 10, 5, 20]
        p.write_text(json.dumps(doc))
        with pytest.raises(DataError):
            load_dataset(p)

    def test_unreadable_file(self, tmp_path):
        p = tmp_path / "nope.json"
        with pytest.raises(DataError):
            load_dataset(p)
        p.write_text("{not json")
        with pytest.raises(DataError):
            load_dataset(p)


class TestParamsRoundTrip:
    def test_round_trip_exact(self, tmp_path):
        rng = np.random.default_rng(0)
        p = zero_params(8, 3)
        p.W_cls[:] = rng.normal(size=(8, 3))
        p.b_reg[:] = rng.normal(size=4)
        f = tmp_path / "p.json"
        save_params(p, f)
        q = load_params(f)
        np.testing.assert_array_equal(p.W_cls, q.W_cls)
        np.testing.assert_array_equal(p.b_cls, q.b_cls)
        np.testing.assert_array_equal(p.W_reg, q.W_reg)
        np.testing.assert_array_equal(p.b_reg, q.b_reg)

    def test_unknown_field_rejected(self, tmp_path):
        f = tmp_path / "p.json"
        save_params(zero_params(4, 2), f)
        doc = json.loads(f.read_text())
        doc["W_extra"] = []
        f.write_text(json.dumps(doc))
        with pytest.raises(DataError):
            load_params(f)

    def test_version_mismatch_rejected(self, tmp_path):
        f = tmp_path / "p.json"
        save_params(zero_params(4, 2), f)
        doc = json.loads(f.read_text())
        doc["version"] = 0
        f.write_text(json.dumps(doc))
        with pytest.raises(DataError, match="version"):
            load_params(f)


class TestMetricsCSV:
    def test_header_is_frozen_schema(self):
        assert METRICS_HEADER == [
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

    def test_writes_header_once_and_appends(self, tmp_path):
        f = tmp_path / "m.csv"
        write_metrics([{"step": 0, "loss_total": 1.5}], f)
        write_metrics([{"step": 1, "loss_total": 1.2}], f)
        lines = f.read_text().strip().splitlines()
        assert lines[0] == ",".join(METRICS_HEADER)
        assert len(lines) == 3
        assert lines[1].startswith("0,1.5")
        assert lines[2].startswith("1,1.2")

    def test_missing_fields_left_empty(self, tmp_path):
        f = tmp_path / "m.csv"
        write_metrics([{"step": 5}], f)
        row = f.read_text().strip().splitlines()[1]
        assert row == "5" + "," * (len(METRICS_HEADER) - 1)
