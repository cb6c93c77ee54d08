import pytest

from simplexec.errors import GraphError
from simplexec.graph import Edge, GroundTruth, build_graph, path_graph, remove_edges


def test_path_construction():
    g = build_graph(3, [(0, 1, 1.0), (1, 2, 1.0)])
    assert [g.out_degree(v) for v in range(3)] == [1, 1, 0]
    assert g.edge_count == 2


def test_single_node():
    g = build_graph(1, [])
    assert g.node_count == 1 and g.edge_count == 0


@pytest.mark.parametrize("edges, message", [
    ([(0, 1, 1.0), (0, 1, 2.0)], "duplicate"),
    ([(0, 0)], "self-loop"),
    ([(0, 3)], "outside"),
])
def test_invalid_edges(edges, message):
    with pytest.raises(GraphError, match=message):
        build_graph(3, edges)


def test_edges_sorted_and_features_kept():
    g = build_graph(3, [(1, 2, 0.5), (0, 2), (0, 1, 0.25)])
    assert [e.pair for e in g.edges] == [(0, 1), (0, 2), (1, 2)]
    assert g.edges[0] == Edge(0, 1, 0.25)
    assert g.feature_array.shape == (3, 1)


def test_remove_nothing_is_identity():
    g = path_graph(3)
    assert remove_edges(g, []) == g


def test_remove_chord(triangle):
    assert remove_edges(triangle, [(0, 2)]) == path_graph(3)


def test_remove_missing_edge():
    with pytest.raises(GraphError):
        remove_edges(path_graph(3), [(2, 0)])


def test_degrees():
    g = path_graph(3)
    assert g.degrees(0) == (0, 1)
    assert g.degrees(2) == (1, 0)
    with pytest.raises(GraphError):
        g.degrees(3)


def test_neighbors_ascending(triangle):
    assert triangle.neighbors(0, "out") == [1, 2]
    assert triangle.neighbors(2, "in") == [0, 1]


def test_remove_edges_keeps_annotations():
    truth = GroundTruth(backbone_nodes=(0, 1, 2))
    g = build_graph(3, [(0, 1), (1, 2), (0, 2)], truth)
    assert remove_edges(g, [(0, 2)]).annotations is truth


def test_ground_truth_round_trip():
    truth = GroundTruth(frozenset({(0, 2)}), frozenset({4}), frozenset({(1, 4)}), frozenset({(5, 6)}), (0, 1, 2))
    assert GroundTruth.from_dict(truth.to_dict()) == truth
    assert truth.source == 0 and truth.sink == 2
