"""Datasets, checkpoints and reports on disk.

Dataset (JSON lines)
    line 1: ``{"format": "simplexec-dataset", "version": 1, "count": N}``
    then N records::

        {"index": i,
         "graph": {"node_count": n, "edges": [[src, dst, feature], ...]},
         "truth": {<GroundTruth fields>},
         "traces": [{"algorithm": "tips", "reached": ["0110...", ...],
                     "continue_flags": [1, ..., 0], "sources": "1000..."}]}

    Reached rows and the source mask are 0/1 strings, one character per node.

Checkpoint (JSON)
    ``{"format": "simplexec-checkpoint", "version": 1, "latent_dim": K,
    "params": {name: {"shape": [r, c], "values": [...]}}, "meta": {...}}``.
    Floats are written with ``repr`` so they load back bit-identical.

Report (CSV)
    ``#``-prefixed metadata lines, then one row per algorithm and one
    accuracy column per scale.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np

from ..errors import FormatError
from ..graph import AssemblyGraph, GroundTruth, build_graph
from ..model import ModelParams
from ..simplify import Algorithm
from ..traces import ExecutionTrace
from .evaluation import EvalReport
from .fileio import atomic_write_text

DATASET_FORMAT, DATASET_VERSION = "simplexec-dataset", 1
CHECKPOINT_FORMAT, CHECKPOINT_VERSION = "simplexec-checkpoint", 1


def _bits(row) -> str:
    return "".join("1" if b else "0" for b in row)


def _unbits(s: str) -> np.ndarray:
    return np.frombuffer(s.encode("ascii"), dtype=np.uint8) - ord("0")


def _check_header(header: dict, fmt: str, version: int, path) -> None:
    if header.get("format") != fmt:
        raise FormatError(f"{path}: expected format {fmt!r}, found {header.get('format')!r}")
    if header.get("version") != version:
        raise FormatError(f"{path}: {fmt} version {header.get('version')} is not readable "
                          f"by this build (supports version {version})")


# -- datasets ---------------------------------------------------------------------

def graph_record(index: int, graph: AssemblyGraph, truth: GroundTruth, traces=()) -> dict:
    return {
        "index": index,
        "graph": {"node_count": graph.node_count, "edges": [[e.src, e.dst, e.feature] for e in graph.edges]},
        "truth": truth.to_dict(),
        "traces": [{"algorithm": t.algorithm.value, "reached": [_bits(r) for r in t.reached],
                    "continue_flags": t.continue_flags.tolist(), "sources": _bits(t.sources)}
                   for t in traces],
    }


def record_to_objects(rec: dict):
    truth = GroundTruth.from_dict(rec["truth"])
    graph = build_graph(rec["graph"]["node_count"], rec["graph"]["edges"], truth)
    traces = [ExecutionTrace(Algorithm.parse(t["algorithm"]),
                             np.array([_unbits(r) for r in t["reached"]], dtype=np.uint8).reshape(
                                 len(t["reached"]), graph.node_count),
                             np.array(t["continue_flags"], dtype=np.uint8), _unbits(t["sources"]),
                             graph.feature_array.copy(), rec["index"])
              for t in rec["traces"]]
    return graph, truth, traces


def save_dataset(path, records) -> Path:
    """``records``: iterable of (graph, truth, traces)."""
    lines = [graph_record(i, g, truth, traces) for i, (g, truth, traces) in enumerate(records)]
    header = {"format": DATASET_FORMAT, "version": DATASET_VERSION, "count": len(lines)}
    text = "\n".join(json.dumps(x, separators=(",", ":")) for x in [header, *lines]) + "\n"
    return atomic_write_text(path, text)


def load_dataset(path) -> list[tuple[AssemblyGraph, GroundTruth, list[ExecutionTrace]]]:
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc
    parsed = []
    for lineno, line in enumerate(lines, start=1):
        try:
            parsed.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: line {lineno} is not valid JSON (truncated file?): {exc}") from exc
    if not parsed:
        raise FormatError(f"{path}: empty dataset file")
    header, body = parsed[0], parsed[1:]
    _check_header(header, DATASET_FORMAT, DATASET_VERSION, path)
    if len(body) != header.get("count"):
        raise FormatError(f"{path}: header promises {header.get('count')} records, found {len(body)} (truncated?)")
    try:
        return [record_to_objects(rec) for rec in body]
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{path}: malformed record: {exc}") from exc


# -- checkpoints ------------------------------------------------------------------

def checkpoint_text(params: ModelParams, meta: dict | None = None) -> str:
    body = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "latent_dim": params.latent_dim,
        "params": {name: {"shape": list(shape), "values": params[name].data.reshape(-1).tolist()}
                   for name, shape, _ in params.layout},
        "meta": meta or {},
    }
    return json.dumps(body, indent=1) + "\n"


def save_checkpoint(path, params: ModelParams, meta: dict | None = None) -> Path:
    return atomic_write_text(path, checkpoint_text(params, meta))


def load_checkpoint(path) -> tuple[ModelParams, dict]:
    path = Path(path)
    try:
        body = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not valid JSON (truncated file?): {exc}") from exc
    _check_header(body, CHECKPOINT_FORMAT, CHECKPOINT_VERSION, path)
    params = ModelParams(int(body["latent_dim"]))
    stored = body.get("params", {})
    missing = set(params.names()) - set(stored)
    if missing:
        raise FormatError(f"{path}: checkpoint lacks parameters {sorted(missing)}")
    for name, shape, _ in params.layout:
        entry = stored[name]
        values = np.array(entry["values"], dtype=np.float64)
        if tuple(entry["shape"]) != shape or values.size != shape[0] * shape[1]:
            raise FormatError(f"{path}: parameter {name} has shape {entry['shape']}, expected {list(shape)}")
        params[name].data[...] = values.reshape(shape)
    return params, body.get("meta", {})


# -- reports ----------------------------------------------------------------------

def report_text(report: EvalReport, mode: str = "tf", metadata: dict | None = None) -> str:
    buf = io.StringIO()
    label = "teacher-forced" if mode == "tf" else "rollout"
    buf.write(f"# accuracy_mode: {label}\n")
    for key, value in (metadata or {}).items():
        buf.write(f"# {key}: {value}\n")
    counts = " ".join(f"{s}x={report.cells[(report.algorithms[0], s)].graphs}" for s in report.scales)
    buf.write(f"# test_graphs_per_algorithm: {counts}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["algorithm", *(f"{s}x" for s in report.scales)])
    for a in report.algorithms:
        writer.writerow([a, *(f"{report.accuracy(a, s, mode):.6f}" for s in report.scales)])
    return buf.getvalue()


def export_report(path, report: EvalReport, mode: str = "tf", metadata: dict | None = None) -> Path:
    return atomic_write_text(path, report_text(report, mode, metadata))


def read_report(path) -> tuple[dict, list[str], dict[str, list[float]]]:
    """(metadata, scale column names, accuracy rows) from an exported CSV."""
    meta, rows = {}, []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.startswith("#"):
            key, _, value = line[1:].partition(":")
            meta[key.strip()] = value.strip()
        elif line:
            rows.append(line)
    table = list(csv.reader(rows))
    if not table:
        raise FormatError(f"{path}: report has no table")
    header, *data = table
    return meta, header[1:], {r[0]: [float(x) for x in r[1:]] for r in data}
