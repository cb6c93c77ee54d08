"""Directed assembly graph with dense integer node ids.

Nodes are reads, edges are overlaps.  A graph is immutable; edge removal
returns a new graph with the same node ids, so ground truth and execution
traces can refer to nodes across simplification steps.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, NamedTuple

import numpy as np

from .errors import GraphError

Pair = tuple[int, int]


class Edge(NamedTuple):
    src: int
    dst: int
    feature: float = 1.0

    @property
    def pair(self) -> Pair:
        return (self.src, self.dst)


@dataclass(frozen=True)
class GroundTruth:
    """Removal sets planted by the generator (or derived from the exact algorithms)."""

    transitive_edges: frozenset[Pair] = frozenset()
    tip_nodes: frozenset[int] = frozenset()
    tip_edges: frozenset[Pair] = frozenset()
    bubble_removable_edges: frozenset[Pair] = frozenset()
    backbone_nodes: tuple[int, ...] = ()

    @property
    def source(self) -> int | None:
        return self.backbone_nodes[0] if self.backbone_nodes else None

    @property
    def sink(self) -> int | None:
        return self.backbone_nodes[-1] if self.backbone_nodes else None

    def to_dict(self) -> dict:
        return {
            "transitive_edges": sorted(map(list, self.transitive_edges)),
            "tip_nodes": sorted(self.tip_nodes),
            "tip_edges": sorted(map(list, self.tip_edges)),
            "bubble_removable_edges": sorted(map(list, self.bubble_removable_edges)),
            "backbone_nodes": list(self.backbone_nodes),
        }

    @classmethod
    def from_dict(cls, d: dict) -> GroundTruth:
        return cls(
            transitive_edges=frozenset(tuple(e) for e in d["transitive_edges"]),
            tip_nodes=frozenset(d["tip_nodes"]),
            tip_edges=frozenset(tuple(e) for e in d["tip_edges"]),
            bubble_removable_edges=frozenset(tuple(e) for e in d["bubble_removable_edges"]),
            backbone_nodes=tuple(d["backbone_nodes"]),
        )


@dataclass(frozen=True)
class AssemblyGraph:
    node_count: int
    edges: tuple[Edge, ...]
    annotations: GroundTruth | None = None
    out_adjacency: tuple[tuple[int, ...], ...] = field(init=False, repr=False, compare=False)
    in_adjacency: tuple[tuple[int, ...], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        outs: list[list[int]] = [[] for _ in range(self.node_count)]
        ins: list[list[int]] = [[] for _ in range(self.node_count)]
        # edges are sorted by (src, dst), so both lists come out ascending
        for e in self.edges:
            outs[e.src].append(e.dst)
        for e in sorted(self.edges, key=lambda e: (e.dst, e.src)):
            ins[e.dst].append(e.src)
        object.__setattr__(self, "out_adjacency", tuple(map(tuple, outs)))
        object.__setattr__(self, "in_adjacency", tuple(map(tuple, ins)))

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    @cached_property
    def edge_pairs(self) -> frozenset[Pair]:
        return frozenset(e.pair for e in self.edges)

    @cached_property
    def edge_index(self) -> dict[Pair, int]:
        return {e.pair: i for i, e in enumerate(self.edges)}

    @cached_property
    def src_array(self) -> np.ndarray:
        return np.fromiter((e.src for e in self.edges), dtype=np.int64, count=len(self.edges))

    @cached_property
    def dst_array(self) -> np.ndarray:
        return np.fromiter((e.dst for e in self.edges), dtype=np.int64, count=len(self.edges))

    @cached_property
    def feature_array(self) -> np.ndarray:
        return np.fromiter((e.feature for e in self.edges), dtype=np.float64,
                           count=len(self.edges)).reshape(-1, 1)

    def has_edge(self, src: int, dst: int) -> bool:
        return (src, dst) in self.edge_pairs

    def _check_node(self, v: int) -> None:
        if not 0 <= v < self.node_count:
            raise GraphError(f"node {v} out of range for graph with {self.node_count} nodes")

    def in_degree(self, v: int) -> int:
        self._check_node(v)
        return len(self.in_adjacency[v])

    def out_degree(self, v: int) -> int:
        self._check_node(v)
        return len(self.out_adjacency[v])

    def degrees(self, v: int) -> tuple[int, int]:
        """(in_degree, out_degree) of ``v``."""
        return self.in_degree(v), self.out_degree(v)

    def neighbors(self, v: int, direction: str = "out") -> list[int]:
        self._check_node(v)
        if direction == "out":
            return list(self.out_adjacency[v])
        if direction == "in":
            return list(self.in_adjacency[v])
        raise ValueError(f"direction must be 'in' or 'out', got {direction!r}")

    def with_annotations(self, truth: GroundTruth | None) -> AssemblyGraph:
        return AssemblyGraph(self.node_count, self.edges, truth)

    def to_networkx(self):
        import networkx as nx

        g = nx.DiGraph()
        g.add_nodes_from(range(self.node_count))
        g.add_edges_from(e.pair for e in self.edges)
        return g


def build_graph(node_count: int, edges: Iterable, annotations: GroundTruth | None = None) -> AssemblyGraph:
    """Validate and build a graph from ``(src, dst[, feature])`` tuples.

    Edges are stored sorted by ``(src, dst)``.
    """
    if node_count < 0:
        raise GraphError(f"node_count must be non-negative, got {node_count}")
    seen: set[Pair] = set()
    out: list[Edge] = []
    for raw in edges:
        e = Edge(int(raw[0]), int(raw[1]), float(raw[2]) if len(raw) > 2 else 1.0)
        if not (0 <= e.src < node_count and 0 <= e.dst < node_count):
            raise GraphError(f"edge {e.src}->{e.dst} has an endpoint outside [0, {node_count})")
        if e.src == e.dst:
            raise GraphError(f"self-loop on node {e.src}")
        if e.pair in seen:
            raise GraphError(f"duplicate edge {e.src}->{e.dst}")
        seen.add(e.pair)
        out.append(e)
    out.sort(key=lambda e: (e.src, e.dst))
    return AssemblyGraph(node_count, tuple(out), annotations)


def path_graph(n: int, feature: float = 1.0) -> AssemblyGraph:
    return build_graph(n, [(i, i + 1, feature) for i in range(n - 1)])


def remove_edges(g: AssemblyGraph, removed: Iterable) -> AssemblyGraph:
    """Drop the given ``(src, dst)`` pairs (or Edges); node ids are untouched."""
    removed = {(int(r[0]), int(r[1])) for r in removed}
    missing = removed - g.edge_pairs
    if missing:
        src, dst = min(missing)
        raise GraphError(f"cannot remove edge {src}->{dst}: not present")
    if not removed:
        return g
    kept = tuple(e for e in g.edges if e.pair not in removed)
    return AssemblyGraph(g.node_count, kept, g.annotations)
