import json

import numpy as np
import pytest

from simplexec.errors import FormatError
from simplexec.harness.evaluation import EvalCell, EvalReport, evaluate, scale_items, EvalConfig
from simplexec.harness.persistence import (export_report, load_checkpoint, load_dataset, read_report,
                                           save_checkpoint, save_dataset)
from simplexec.model import ModelParams
from simplexec.simplify import ALGORITHMS
from simplexec.synthgen import density_spec, generate_dataset
from simplexec.traces import build_trace


@pytest.fixture
def records():
    data = generate_dataset(density_spec("parallel", 30, seed=4), 3)
    return [(g, truth, [build_trace(g, truth, a, i) for a in ALGORITHMS]) for i, (g, truth) in enumerate(data)]


def test_dataset_round_trip(tmp_path, records):
    path = save_dataset(tmp_path / "d.jsonl", records)
    loaded = load_dataset(path)
    assert len(loaded) == 3
    for (g, truth, traces), (g2, truth2, traces2) in zip(records, loaded):
        assert g2 == g and truth2 == truth and traces2 == traces


def test_dataset_truncation_detected(tmp_path, records):
    path = save_dataset(tmp_path / "d.jsonl", records)
    lines = path.read_text().splitlines()
    path.write_text("\n".join(lines[:-1]) + "\n")
    with pytest.raises(FormatError, match="truncated"):
        load_dataset(path)
    path.write_text("\n".join(lines)[:-40])
    with pytest.raises(FormatError, match="line 4"):
        load_dataset(path)


def test_dataset_version_mismatch(tmp_path, records):
    path = save_dataset(tmp_path / "d.jsonl", records)
    lines = path.read_text().splitlines()
    header = json.loads(lines[0])
    header["version"] = 99
    path.write_text("\n".join([json.dumps(header), *lines[1:]]) + "\n")
    with pytest.raises(FormatError, match="version 99.*version 1"):
        load_dataset(path)


def test_checkpoint_round_trip_is_bit_exact(tmp_path):
    params = ModelParams.initialize(8, seed=9)
    path = save_checkpoint(tmp_path / "c.json", params, {"note": "x"})
    loaded, meta = load_checkpoint(path)
    assert loaded.values.tobytes() == params.values.tobytes()
    assert meta == {"note": "x"}
    items = scale_items(EvalConfig(backbone_len=20, test_graphs=2, min_test_graphs=1), "tips", 1)
    assert evaluate(loaded, items, "rollout") == evaluate(params, items, "rollout")


def test_checkpoint_errors(tmp_path):
    path = save_checkpoint(tmp_path / "c.json", ModelParams.initialize(4, seed=1))
    body = json.loads(path.read_text())
    body["version"] = 2
    (tmp_path / "v.json").write_text(json.dumps(body))
    with pytest.raises(FormatError, match="version 2"):
        load_checkpoint(tmp_path / "v.json")
    (tmp_path / "t.json").write_text(path.read_text()[:100])
    with pytest.raises(FormatError, match="truncated"):
        load_checkpoint(tmp_path / "t.json")


def test_report_shape(tmp_path):
    scales = (1, 2, 4, 8, 20)
    algorithms = tuple(a.value for a in ALGORITHMS)
    report = EvalReport(scales, algorithms)
    for i, a in enumerate(algorithms):
        for s in scales:
            report.cells[(a, s)] = EvalCell(0.9 + i / 100, 0.8, graphs=3)
    path = export_report(tmp_path / "r.csv", report, "tf", {"seed": 0})
    meta, columns, rows = read_report(path)
    assert columns == ["1x", "2x", "4x", "8x", "20x"]
    assert len(rows) == 3 and all(len(v) == 5 for v in rows.values())
    assert meta["accuracy_mode"] == "teacher-forced" and meta["seed"] == "0"
    assert rows["tips"][0] == pytest.approx(0.91)


def test_writes_are_atomic(tmp_path, monkeypatch):
    import os
    target = tmp_path / "c.json"
    target.write_text("old")

    def boom(*args):
        raise OSError("disk full")
    monkeypatch.setattr(os, "replace", boom)
    with pytest.raises(OSError):
        save_checkpoint(target, ModelParams.initialize(4, seed=1))
    assert target.read_text() == "old"
    assert [p.name for p in tmp_path.iterdir()] == ["c.json"]
