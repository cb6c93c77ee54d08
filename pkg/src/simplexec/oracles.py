"""Brute-force reference versions of the simplification algorithms.

These are deliberately written differently from :mod:`simplexec.simplify`
(adjacency matrices, weakly connected chain components, networkx path
enumeration) and are only meant for small graphs in tests.
"""

from __future__ import annotations

import itertools

import networkx as nx
import numpy as np

from .errors import GraphError
from .graph import AssemblyGraph, Pair
from .simplify import path_rank

MAX_ORACLE_NODES = 64


def _check_size(g: AssemblyGraph) -> None:
    if g.node_count > MAX_ORACLE_NODES:
        raise GraphError(f"oracles accept at most {MAX_ORACLE_NODES} nodes, got {g.node_count}")


def oracle_transitive(g: AssemblyGraph) -> frozenset[Pair]:
    _check_size(g)
    n = g.node_count
    adj = np.zeros((n, n), dtype=bool)
    for e in g.edges:
        adj[e.src, e.dst] = True
    found = set()
    for i in range(n):
        for j in range(n):
            for k in range(n):
                if len({i, j, k}) == 3 and adj[i, k] and adj[i, j] and adj[j, k]:
                    found.add((i, k))
    return frozenset(found)


def _tip_components(dg: nx.DiGraph, max_len: int, protected: set[int]):
    """Tips as weakly connected components of non-junction nodes with one predecessor.

    Such a component is a simple chain.  It is a tip when it contains a node
    without successors, is no longer than ``max_len``, and the predecessor of
    its head is a junction.
    """
    def is_junction(v):
        return dg.in_degree(v) > 1 or dg.out_degree(v) > 1

    chain_nodes = [v for v in dg if dg.in_degree(v) == 1 and dg.out_degree(v) <= 1]
    sub = dg.subgraph(chain_nodes)
    nodes, edges = set(), set()
    for comp in nx.weakly_connected_components(sub):
        if len(comp) > max_len or comp & protected:
            continue
        if not any(dg.out_degree(v) == 0 for v in comp):
            continue
        head = next(v for v in comp if sub.in_degree(v) == 0)
        (pred,) = dg.predecessors(head)
        if not is_junction(pred):
            continue
        nodes |= comp
        edges |= {(u, v) for u, v in dg.in_edges(comp)}
    return nodes, edges


def oracle_tips(g: AssemblyGraph, max_tip_len: int = 10) -> tuple[frozenset[int], frozenset[Pair]]:
    _check_size(g)
    dg = g.to_networkx()
    truth = g.annotations
    symmetric = truth is not None and bool(truth.backbone_nodes)
    protected = {truth.source, truth.sink} if symmetric else set()
    all_nodes, all_edges = set(), set()
    while True:
        nodes, edges = _tip_components(dg, max_tip_len, protected)
        if symmetric:
            rnodes, redges = _tip_components(dg.reverse(copy=True), max_tip_len, protected)
            nodes |= rnodes
            edges |= {(v, u) for u, v in redges}
        if not edges:
            break
        dg.remove_edges_from(edges)
        all_nodes |= nodes
        all_edges |= edges
    return frozenset(all_nodes), frozenset(all_edges)


def _best_bubble(dg: nx.DiGraph, max_len: int):
    """Highest-priority (s, t, kept, discarded) candidate, or None.

    Sources and sinks are scanned in ascending order; for the first pair that
    admits a bubble, every pair of internally disjoint paths is compared.
    """
    for s in sorted(dg.nodes):
        others = set(dg.nodes) - {s}
        by_sink: dict[int, list[tuple[int, ...]]] = {}
        for p in nx.all_simple_paths(dg, s, others, cutoff=max_len + 1):
            if 1 <= len(p) - 2 <= max_len:
                by_sink.setdefault(p[-1], []).append(tuple(p[1:-1]))
        for t in sorted(by_sink):
            pairs = []
            for p, q in itertools.combinations(by_sink[t], 2):
                if set(p).isdisjoint(q):
                    keep, discard = sorted((p, q), key=path_rank)
                    pairs.append((path_rank(keep), path_rank(discard), keep, discard))
            if pairs:
                _, _, keep, discard = min(pairs)
                return s, t, keep, discard
    return None


def oracle_bubbles(g: AssemblyGraph, max_path_len: int = 10) -> frozenset[Pair]:
    _check_size(g)
    dg = g.to_networkx()
    removed = set()
    while True:
        best = _best_bubble(dg, max_path_len)
        if best is None:
            return frozenset(removed)
        s, t, keep, discard = best
        members = {s, t} | set(keep) | set(discard)
        route = [s, *discard, t]
        steps = list(zip(route, route[1:]))
        for pos, u in enumerate(discard):
            touching = set(dg.successors(u)) | set(dg.predecessors(u))
            if touching - members:
                steps = steps[: pos + 1]
                break
        dg.remove_edges_from(steps)
        removed.update(steps)
