"""Step-by-step supervision for the neural executor.

Each algorithm is cast as a traversal: a parallel BFS from the source that
may only use edges the algorithm keeps.  The model sees the full graph; the
trace records which nodes the constrained BFS has reached after each step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import TraceError
from .graph import AssemblyGraph, GroundTruth
from .simplify import Algorithm, removal_set

NODE_FEATURES = 2  # reached bit, is-source flag


@dataclass(frozen=True)
class StepState:
    reached: np.ndarray
    continue_flag: int


@dataclass(frozen=True, eq=False)
class ExecutionTrace:
    algorithm: Algorithm
    reached: np.ndarray  # (T, |V|) uint8, row t-1 holds step t
    continue_flags: np.ndarray  # (T,) uint8
    sources: np.ndarray  # (|V|,) uint8
    edge_features: np.ndarray  # (|E|, 1)
    graph_ref: int | None = None

    @property
    def length(self) -> int:
        return self.reached.shape[0]

    @property
    def node_count(self) -> int:
        return self.reached.shape[1]

    @property
    def steps(self) -> list[StepState]:
        return [StepState(r, int(c)) for r, c in zip(self.reached, self.continue_flags)]

    def __eq__(self, other):
        if not isinstance(other, ExecutionTrace):
            return NotImplemented
        return (self.algorithm == other.algorithm and self.graph_ref == other.graph_ref
                and np.array_equal(self.reached, other.reached)
                and np.array_equal(self.continue_flags, other.continue_flags)
                and np.array_equal(self.sources, other.sources)
                and np.array_equal(self.edge_features, other.edge_features))


def trace_sources(g: AssemblyGraph, truth: GroundTruth, algorithm: Algorithm) -> np.ndarray:
    """BFS entry points.

    Synthetic graphs start only from the backbone head.  Otherwise every node
    without predecessors in the full graph is a source, minus nodes the
    algorithm deletes.
    """
    sources = np.zeros(g.node_count, dtype=np.uint8)
    if truth.backbone_nodes:
        sources[truth.source] = 1
        return sources
    for v in range(g.node_count):
        if not g.in_adjacency[v]:
            sources[v] = 1
    if algorithm is Algorithm.TIPS and truth.tip_nodes:
        sources[list(truth.tip_nodes)] = 0
    return sources


def build_trace(g: AssemblyGraph, truth: GroundTruth, algorithm: Algorithm | str,
                graph_ref: int | None = None) -> ExecutionTrace:
    algorithm = Algorithm.parse(algorithm)
    removed = removal_set(truth, algorithm)
    if not removed <= g.edge_pairs:
        raise TraceError(f"ground truth for {algorithm.value} names edges missing from the graph")
    keep = np.fromiter((e.pair not in removed for e in g.edges), dtype=bool, count=g.edge_count)
    src, dst = g.src_array[keep], g.dst_array[keep]

    reached = trace_sources(g, truth, algorithm).astype(bool)
    if not reached.any():
        raise TraceError("graph has no source node; cannot build a trace")
    sources = reached.astype(np.uint8)
    rows = [reached]
    while True:
        nxt = reached.copy()
        nxt[dst[reached[src]]] = True
        if np.array_equal(nxt, reached):
            break
        rows.append(nxt)
        reached = nxt
    flags = np.ones(len(rows), dtype=np.uint8)
    flags[-1] = 0
    return ExecutionTrace(algorithm, np.array(rows, dtype=np.uint8), flags, sources,
                          g.feature_array.copy(), graph_ref)


def teacher_inputs(trace: ExecutionTrace, t: int) -> np.ndarray:
    """Node inputs for step ``t`` (1-based): previous ground-truth reached bits and the source flag."""
    if not 1 <= t <= trace.length:
        raise TraceError(f"step {t} outside [1, {trace.length}]")
    prev = trace.sources if t == 1 else trace.reached[t - 2]
    return np.stack([prev, trace.sources], axis=1).astype(np.float64)
