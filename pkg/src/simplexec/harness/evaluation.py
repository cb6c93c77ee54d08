"""Accuracy of a trained executor, per algorithm and graph scale."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from ..graph import AssemblyGraph
from ..model import ModelParams, rollout, step_teacher_forced
from ..ndiff import GradTape
from ..simplify import ALGORITHMS, Algorithm, SimplifyConfig, derive_truth
from ..synthgen import density_spec, derive_seed, generate_dataset
from ..traces import build_trace
from .training import ROLE_TEST, Item, build_items

SCALES = (1, 2, 4, 8, 20)
MODES = ("tf", "rollout")


def _counts_teacher_forced(params: ModelParams, graph, trace) -> tuple[int, int]:
    tape = GradTape(enabled=False)
    h, correct = None, 0
    for t in range(1, trace.length + 1):
        out = step_teacher_forced(params, trace.algorithm, graph, trace, t, h, tape)
        if t >= 2:
            correct += int(np.count_nonzero(out.prediction == trace.reached[t - 1]))
        h = out.h.data
    return correct, (trace.length - 1) * graph.node_count


def _counts_rollout(params: ModelParams, graph, trace) -> tuple[int, int]:
    # steps present in only one of the two sequences count as entirely wrong
    predicted = rollout(params, trace.algorithm, graph, trace.sources)
    horizon = max(len(predicted), trace.length)
    correct = sum(int(np.count_nonzero(predicted[t - 1].reached == trace.reached[t - 1]))
                  for t in range(2, min(len(predicted), trace.length) + 1))
    return correct, (horizon - 1) * graph.node_count


def accuracy_counts(params: ModelParams, items: list[Item], mode: str = "tf") -> tuple[int, int]:
    """(correct, total) node predictions over steps t >= 2 of every item."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    count = _counts_teacher_forced if mode == "tf" else _counts_rollout
    correct = total = 0
    for graph, trace in items:
        c, n = count(params, graph, trace)
        correct, total = correct + c, total + n
    return correct, total


def evaluate(params: ModelParams, items: list[Item], mode: str = "tf") -> float:
    """Fraction of correct node predictions; 1.0 when there is nothing to predict."""
    correct, total = accuracy_counts(params, items, mode)
    return correct / total if total else 1.0


@dataclass(frozen=True)
class EvalConfig:
    """Test-set layout.

    Each scale gets ``ceil(test_graphs / scale)`` graphs, but at least
    ``min_test_graphs``, so larger scales cost about as much as small ones.
    """

    scales: tuple[int, ...] = SCALES
    algorithms: tuple[str, ...] = tuple(a.value for a in ALGORITHMS)
    modes: tuple[str, ...] = MODES
    test_graphs: int = 20
    min_test_graphs: int = 4
    backbone_len: int = 50
    seed: int = 0

    def graphs_at(self, scale: int) -> int:
        return max(self.min_test_graphs, math.ceil(self.test_graphs / scale))

    def to_dict(self) -> dict:
        return asdict(self)


def scale_items(config: EvalConfig, algorithm: Algorithm | str, scale: int) -> list[Item]:
    """Held-out graphs planted only with ``algorithm``'s structure type."""
    algorithm = Algorithm.parse(algorithm)
    key = ALGORITHMS.index(algorithm)
    spec = density_spec(algorithm, config.backbone_len, scale, seed=derive_seed(config.seed, ROLE_TEST, scale, key))
    return build_items(generate_dataset(spec, config.graphs_at(scale)), (algorithm,))


def gfa_items(graph: AssemblyGraph, algorithm: Algorithm | str,
              config: SimplifyConfig = SimplifyConfig()) -> list[Item]:
    """A single item whose supervision comes from running the exact algorithm on ``graph``."""
    return [(graph, build_trace(graph, derive_truth(graph, config), algorithm, graph_ref=0))]


@dataclass
class EvalCell:
    teacher_forced_accuracy: float | None = None
    rollout_accuracy: float | None = None
    graphs: int = 0
    nodes: int = 0


@dataclass
class EvalReport:
    """Accuracy grid: algorithms x scales."""

    scales: tuple[int, ...]
    algorithms: tuple[str, ...]
    cells: dict[tuple[str, int], EvalCell] = field(default_factory=dict)
    config: dict = field(default_factory=dict)

    def accuracy(self, algorithm: str, scale: int, mode: str = "tf") -> float:
        cell = self.cells[(Algorithm.parse(algorithm).value, scale)]
        value = cell.teacher_forced_accuracy if mode == "tf" else cell.rollout_accuracy
        if value is None:
            raise KeyError(f"{mode} accuracy was not computed for {algorithm} at {scale}x")
        return value

    def grid(self, mode: str = "tf") -> np.ndarray:
        return np.array([[self.accuracy(a, s, mode) for s in self.scales] for a in self.algorithms])


def evaluate_scales(params: ModelParams, config: EvalConfig = EvalConfig(), progress=None) -> EvalReport:
    """Fill every (algorithm, scale) cell for the requested accuracy modes."""
    report = EvalReport(tuple(config.scales), tuple(Algorithm.parse(a).value for a in config.algorithms),
                        config=config.to_dict())
    for a in report.algorithms:
        for scale in report.scales:
            items = scale_items(config, a, scale)
            cell = EvalCell(graphs=len(items), nodes=sum(g.node_count for g, _ in items))
            if "tf" in config.modes:
                cell.teacher_forced_accuracy = evaluate(params, items, "tf")
            if "rollout" in config.modes:
                cell.rollout_accuracy = evaluate(params, items, "rollout")
            report.cells[(a, scale)] = cell
            if progress is not None:
                progress(a, scale, cell)
    return report
