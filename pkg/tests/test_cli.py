import json
import subprocess
import sys
from pathlib import Path

import pytest

from simplexec.cli import main
from simplexec.harness.gfa import read_gfa, write_gfa
from simplexec.harness.persistence import load_dataset, read_report
from simplexec.graph import build_graph

FIXTURES = Path(__file__).parent / "fixtures"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def config_line(out):
    line = next(l for l in out.splitlines() if l.startswith("config: "))
    return json.loads(line[len("config: "):])


def test_generate_hundred_graphs(tmp_path, capsys):
    out_path = tmp_path / "d.jsonl"
    code, out, _ = run(capsys, "generate", "--backbone", 50, "--scale", 1, "--count", 100, "--seed", 7,
                       "--out", out_path)
    assert code == 0
    assert config_line(out)["seed"] == 7
    data = load_dataset(out_path)
    assert len(data) == 100 and all(len(traces) == 3 for _, _, traces in data)


def test_trace_command(tmp_path, capsys):
    d = tmp_path / "d.jsonl"
    run(capsys, "generate", "--backbone", 20, "--count", 2, "--out", d)
    code, out, _ = run(capsys, "trace", "--dataset", d, "--algorithm", "tips", "--out", tmp_path / "t.jsonl")
    assert code == 0 and "graph 1:" in out
    assert [t.algorithm.value for _, _, ts in load_dataset(tmp_path / "t.jsonl") for t in ts] == ["tips", "tips"]


def test_simplify_triangle(tmp_path, capsys):
    src = write_gfa(tmp_path / "tri.gfa", build_graph(3, [(0, 1), (1, 2), (0, 2)]))
    code, out, _ = run(capsys, "simplify", src, "--algorithm", "transitive", "--out", tmp_path / "o.gfa")
    assert code == 0
    assert not read_gfa(tmp_path / "o.gfa").graph.has_edge(0, 2)
    assert config_line(out)["algorithm"] == "transitive"


def test_train_and_eval_two_scales(tmp_path, capsys):
    ck = tmp_path / "c.json"
    code, out, _ = run(capsys, "train", "--mode", "isolated:tips", "--train-count", 4, "--backbone", 20,
                       "--latent-dim", 8, "--max-epochs", 1, "--seed", 3, "--out-checkpoint", ck)
    assert code == 0 and config_line(out)["seed"] == 3
    report = tmp_path / "r.csv"
    code, out, _ = run(capsys, "eval", "--checkpoint", ck, "--scales", "1,20", "--backbone", 10,
                       "--test-graphs", 1, "--min-test-graphs", 1, "--report", report)
    assert code == 0
    meta, columns, rows = read_report(report)
    assert columns == ["1x", "20x"] and len(rows) == 3
    assert meta["accuracy_mode"] == "teacher-forced"


def test_eval_on_gfa(tmp_path, capsys):
    ck = tmp_path / "c.json"
    run(capsys, "train", "--train-count", 3, "--backbone", 20, "--latent-dim", 8, "--max-epochs", 1,
        "--out-checkpoint", ck)
    code, out, _ = run(capsys, "eval", "--checkpoint", ck, "--gfa", FIXTURES / "small.gfa", "--mode", "both")
    assert code == 0 and "bubbles" in out and "rollout" in out


def test_gfa_stats(capsys):
    code, out, _ = run(capsys, "gfa-stats", FIXTURES / "small.gfa")
    assert code == 0 and "nodes 60" in out


@pytest.mark.parametrize("argv, code", [
    (["simplify", "/nonexistent.gfa"], 3),
    (["train", "--mode", "sideways", "--out-checkpoint", "x.json"], 2),
    (["generate", "--backbone", "10", "--n-bubbles", "9", "--out", "x.jsonl"], 4),
])
def test_categorized_exit_codes(argv, code, capsys):
    assert main(argv) == code
    assert "error [" in capsys.readouterr().err


def test_usage_errors_exit_nonzero(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["train", "--bogus"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit):
        main([])


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "simplexec", "gfa-stats", str(FIXTURES / "small.gfa")],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and proc.stdout.startswith("config: ")
