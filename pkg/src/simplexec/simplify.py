"""Exact transitive-edge removal, tip trimming and bubble popping.

All three operate on an immutable :class:`AssemblyGraph` and report what
they removed.  The brute-force counterparts used for testing live in
:mod:`simplexec.oracles`.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .graph import AssemblyGraph, GroundTruth, Pair, remove_edges

DEFAULT_MAX_TIP_LEN = 10
DEFAULT_MAX_PATH_LEN = 10


class Algorithm(str, enum.Enum):
    TRANSITIVE = "transitive"
    TIPS = "tips"
    BUBBLES = "bubbles"

    @classmethod
    def parse(cls, value: str | Algorithm) -> Algorithm:
        if isinstance(value, cls):
            return value
        try:
            return cls(value.lower())
        except ValueError:
            choices = ", ".join(a.value for a in cls)
            raise ValueError(f"unknown algorithm {value!r} (expected one of {choices})") from None


ALGORITHMS = tuple(Algorithm)


@dataclass(frozen=True)
class SimplificationResult:
    algorithm: Algorithm
    removed_edges: frozenset[Pair]
    removed_nodes: frozenset[int]
    retained_graph: AssemblyGraph


@dataclass(frozen=True)
class SimplifyConfig:
    max_tip_len: int = DEFAULT_MAX_TIP_LEN
    max_path_len: int = DEFAULT_MAX_PATH_LEN


def _mutable_adjacency(g: AssemblyGraph) -> tuple[list[set[int]], list[set[int]]]:
    return [set(a) for a in g.out_adjacency], [set(a) for a in g.in_adjacency]


# -- transitive edges ---------------------------------------------------------

def find_transitive_edges(g: AssemblyGraph) -> frozenset[Pair]:
    """Edges ``i->k`` with a witness ``j`` such that ``i->j`` and ``j->k`` exist.

    Witnesses are read from the input graph, so a transitive edge may still
    witness another one (no cascading).
    """
    out_sets = [set(a) for a in g.out_adjacency]
    found = set()
    for e in g.edges:
        i, k = e.src, e.dst
        if any(k in out_sets[j] for j in g.out_adjacency[i] if j != k):
            found.add((i, k))
    return frozenset(found)


def remove_transitive(g: AssemblyGraph) -> SimplificationResult:
    removed = find_transitive_edges(g)
    return SimplificationResult(Algorithm.TRANSITIVE, removed, frozenset(), remove_edges(g, removed))


# -- tips ---------------------------------------------------------------------

def _dead_end_chains(outs, ins, max_len, protected):
    """One pass: chains walked back from every node without successors.

    The walk follows unique predecessors and stops at the first junction
    (more than one incoming or outgoing edge).  The chain is a tip only if
    the junction is reached within ``max_len`` nodes without passing a
    protected node.
    """
    nodes: set[int] = set()
    edges: set[Pair] = set()
    for v in range(len(outs)):
        if outs[v]:
            continue
        chain = []
        cur = v
        while len(ins[cur]) <= 1 and len(outs[cur]) <= 1:
            chain.append(cur)
            if len(chain) > max_len or not ins[cur] or cur in protected:
                chain = None
                break
            cur = next(iter(ins[cur]))
        if not chain:
            continue
        nodes.update(chain)
        edges.add((cur, chain[-1]))
        edges.update((chain[i + 1], chain[i]) for i in range(len(chain) - 1))
    return nodes, edges


def trim_tips(g: AssemblyGraph, max_tip_len: int = DEFAULT_MAX_TIP_LEN) -> SimplificationResult:
    """Remove short dead-end branches, repeating until nothing changes.

    When the graph carries a backbone annotation, its first and last nodes
    are never treated as dead ends, and chains hanging off in-degree-0
    starts are trimmed symmetrically.
    """
    if max_tip_len < 1:
        raise ValueError(f"max_tip_len must be >= 1, got {max_tip_len}")
    outs, ins = _mutable_adjacency(g)
    truth = g.annotations
    symmetric = truth is not None and bool(truth.backbone_nodes)
    protected = {truth.source, truth.sink} if symmetric else set()

    removed_nodes: set[int] = set()
    removed_edges: set[Pair] = set()
    while True:
        nodes, edges = _dead_end_chains(outs, ins, max_tip_len, protected)
        if symmetric:
            back_nodes, back_edges = _dead_end_chains(ins, outs, max_tip_len, protected)
            nodes |= back_nodes
            edges |= {(b, a) for a, b in back_edges}
        if not edges:
            break
        for a, b in edges:
            outs[a].discard(b)
            ins[b].discard(a)
        removed_nodes |= nodes
        removed_edges |= edges

    return SimplificationResult(Algorithm.TIPS, frozenset(removed_edges), frozenset(removed_nodes),
                                remove_edges(g, removed_edges))


# -- bubbles ------------------------------------------------------------------

def path_rank(internal: tuple[int, ...]) -> tuple:
    """Sort key for bubble paths: more internal nodes first, then lexicographic ids."""
    return (-len(internal), internal)


def _paths_by_sink(s: int, outs, max_len: int) -> dict[int, list[tuple[int, ...]]]:
    """Internal node sequences of simple paths ``s -> ... -> t`` with 1..max_len internal nodes."""
    found: dict[int, list[tuple[int, ...]]] = {}
    stack = [(n,) for n in sorted(outs[s], reverse=True)]
    while stack:
        internal = stack.pop()
        for w in outs[internal[-1]]:
            if w == s or w in internal:
                continue
            found.setdefault(w, []).append(internal)
            if len(internal) < max_len:
                stack.append(internal + (w,))
    return found


def _first_bubble(s: int, outs, max_len: int):
    if len(outs[s]) < 2:
        return None
    by_sink = _paths_by_sink(s, outs, max_len)
    for t in sorted(by_sink):
        paths = sorted(by_sink[t], key=path_rank)
        for keep in paths:
            keep_set = set(keep)
            for other in paths:
                if other is not keep and keep_set.isdisjoint(other):
                    return t, keep, other
    return None


def bubble_removal(s: int, t: int, keep, discard, outs, ins) -> list[Pair]:
    """Edges of the discarded path to delete.

    The discarded path loses its edges from ``s`` up to (and including the
    edge into) its first internal node that touches anything outside the
    bubble; edges from that node onward are kept.
    """
    inside = {s, t, *keep, *discard}
    seq = (s, *discard, t)
    cut = len(seq) - 1
    for idx, u in enumerate(discard):
        if not (outs[u] | ins[u]) <= inside:
            cut = idx + 1
            break
    return [(seq[i], seq[i + 1]) for i in range(cut)]


def pop_bubbles(g: AssemblyGraph, max_path_len: int = DEFAULT_MAX_PATH_LEN) -> SimplificationResult:
    """Pop simple bubbles one at a time (smallest source, then smallest sink) until none remain.

    A bubble is a pair of internally node-disjoint paths ``s ~> t``, each with
    between 1 and ``max_path_len`` internal nodes.  The higher-ranked path
    (see :func:`path_rank`) is kept.
    """
    if max_path_len < 2:
        raise ValueError(f"max_path_len must be >= 2, got {max_path_len}")
    outs, ins = _mutable_adjacency(g)
    removed: set[Pair] = set()
    # deleting edges never creates a bubble, so sources already cleared stay clear
    s = 0
    while s < g.node_count:
        found = _first_bubble(s, outs, max_path_len)
        if found is None:
            s += 1
            continue
        t, keep, discard = found
        for a, b in bubble_removal(s, t, keep, discard, outs, ins):
            outs[a].discard(b)
            ins[b].discard(a)
            removed.add((a, b))
    return SimplificationResult(Algorithm.BUBBLES, frozenset(removed), frozenset(),
                                remove_edges(g, removed))


# -- composition --------------------------------------------------------------

def run_algorithm(g: AssemblyGraph, algorithm: Algorithm | str,
                  config: SimplifyConfig = SimplifyConfig()) -> SimplificationResult:
    algorithm = Algorithm.parse(algorithm)
    if algorithm is Algorithm.TRANSITIVE:
        return remove_transitive(g)
    if algorithm is Algorithm.TIPS:
        return trim_tips(g, config.max_tip_len)
    return pop_bubbles(g, config.max_path_len)


def run_pipeline(g: AssemblyGraph, config: SimplifyConfig = SimplifyConfig()) -> list[SimplificationResult]:
    """Transitive removal, then tips, then bubbles; each stage sees the previous output."""
    results = []
    for algorithm in ALGORITHMS:
        res = run_algorithm(g, algorithm, config)
        results.append(res)
        g = res.retained_graph
    return results


def simplify_pipeline(g: AssemblyGraph, config: SimplifyConfig = SimplifyConfig()) -> AssemblyGraph:
    return run_pipeline(g, config)[-1].retained_graph


def derive_truth(g: AssemblyGraph, config: SimplifyConfig = SimplifyConfig()) -> GroundTruth:
    """Ground truth for a graph without planted structures: each algorithm run on the input."""
    tips = trim_tips(g, config.max_tip_len)
    backbone = g.annotations.backbone_nodes if g.annotations else ()
    return GroundTruth(
        transitive_edges=find_transitive_edges(g),
        tip_nodes=tips.removed_nodes,
        tip_edges=tips.removed_edges,
        bubble_removable_edges=pop_bubbles(g, config.max_path_len).removed_edges,
        backbone_nodes=backbone,
    )


def removal_set(truth: GroundTruth, algorithm: Algorithm | str) -> frozenset[Pair]:
    algorithm = Algorithm.parse(algorithm)
    if algorithm is Algorithm.TRANSITIVE:
        return truth.transitive_edges
    if algorithm is Algorithm.TIPS:
        return truth.tip_edges
    return truth.bubble_removable_edges
