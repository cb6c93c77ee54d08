import numpy as np
import pytest
from hypothesis import given, strategies as st

from simplexec.errors import TraceError
from simplexec.graph import GroundTruth, build_graph, path_graph
from simplexec.simplify import ALGORITHMS, Algorithm, derive_truth, removal_set
from simplexec.synthgen import density_spec, generate
from simplexec.traces import NODE_FEATURES, build_trace, teacher_inputs

EMPTY = GroundTruth()


def reached_sets(trace):
    return [set(np.flatnonzero(r).tolist()) for r in trace.reached]


def test_path_trace():
    trace = build_trace(path_graph(3), EMPTY, "transitive")
    assert reached_sets(trace) == [{0}, {0, 1}, {0, 1, 2}]
    assert trace.length == 3
    assert trace.continue_flags.tolist() == [1, 1, 0]


def test_transitive_edge_is_barred(triangle):
    trace = build_trace(triangle, derive_truth(triangle), Algorithm.TRANSITIVE)
    assert reached_sets(trace) == [{0}, {0, 1}, {0, 1, 2}]


def test_without_removal_the_chord_is_used(triangle):
    trace = build_trace(triangle, EMPTY, Algorithm.TRANSITIVE)
    assert reached_sets(trace) == [{0}, {0, 1, 2}]


def test_tip_never_reached():
    truth = GroundTruth(tip_nodes=frozenset({3}), tip_edges=frozenset({(1, 3)}), backbone_nodes=(0, 1, 2))
    g = build_graph(4, [(0, 1), (1, 2), (1, 3)], truth)
    trace = build_trace(g, truth, Algorithm.TIPS)
    assert trace.length == 3
    assert not trace.reached[:, 3].any()


def test_teacher_inputs():
    trace = build_trace(path_graph(3), EMPTY, "tips")
    assert teacher_inputs(trace, 2).tolist() == [[1, 1], [0, 0], [0, 0]]
    assert (teacher_inputs(trace, 1)[:, 0] == trace.sources).all()
    with pytest.raises(TraceError):
        teacher_inputs(trace, 4)


def test_no_source_is_an_error():
    cycle = build_graph(3, [(0, 1), (1, 2), (2, 0)])
    with pytest.raises(TraceError):
        build_trace(cycle, EMPTY, "bubbles")


def test_truth_naming_missing_edges_is_an_error():
    bad = GroundTruth(transitive_edges=frozenset({(2, 0)}))
    with pytest.raises(TraceError):
        build_trace(path_graph(3), bad, "transitive")


@given(st.sampled_from(["transitive", "tips", "bubbles", "parallel"]), st.integers(0, 2**31),
       st.sampled_from(ALGORITHMS))
def test_trace_invariants(kind, seed, algorithm):
    g, truth = generate(density_spec(kind, 30, seed=seed))
    trace = build_trace(g, truth, algorithm)
    assert teacher_inputs(trace, 1).shape == (g.node_count, NODE_FEATURES)
    # reached sets only grow, and every step adds something
    diffs = np.diff(trace.reached.astype(int), axis=0)
    assert (diffs >= 0).all() and (diffs.sum(axis=1) > 0).all()
    assert trace.reached[0].sum() == 1 and trace.reached[0, truth.source] == 1
    assert trace.continue_flags[-1] == 0 and trace.continue_flags[:-1].all()
    if algorithm is Algorithm.TIPS:
        assert not trace.reached[:, sorted(truth.tip_nodes)].any()
    # the backbone is always fully reached
    assert trace.reached[-1, list(truth.backbone_nodes)].all()
    removed = removal_set(truth, algorithm)
    # no step crosses a removed edge: a node's first arrival comes through a kept edge
    first = trace.reached.argmax(axis=0)
    for v in range(g.node_count):
        if trace.reached[-1, v] and first[v] > 0:
            assert any(trace.reached[first[v] - 1, u] and (u, v) not in removed for u in g.in_adjacency[v])
