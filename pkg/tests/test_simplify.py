import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import random_graph
from simplexec.graph import GroundTruth, build_graph, path_graph
from simplexec.oracles import oracle_bubbles, oracle_tips, oracle_transitive
from simplexec.simplify import (Algorithm, SimplifyConfig, find_transitive_edges, pop_bubbles, remove_transitive,
                                run_algorithm, run_pipeline, simplify_pipeline, trim_tips)
from strategies import small_digraphs


# -- transitive edges

@pytest.mark.parametrize("n, edges, expected", [
    (3, [(0, 1), (1, 2), (0, 2)], {(0, 2)}),
    (4, [(0, 1), (1, 2), (2, 3), (0, 3)], set()),
    (4, [(0, 1), (1, 2), (0, 2), (2, 3), (1, 3)], {(0, 2), (1, 3)}),
])
def test_transitive_examples(n, edges, expected):
    assert find_transitive_edges(build_graph(n, edges)) == expected


def test_transitive_on_path():
    assert find_transitive_edges(path_graph(50)) == frozenset()


def test_transitive_is_not_cascading():
    # 0->2 and 0->3 both have witnesses in the input, even though 0->3's witness 0->2 is itself removed
    g = build_graph(4, [(0, 1), (1, 2), (0, 2), (2, 3), (0, 3)])
    assert find_transitive_edges(g) == {(0, 2), (0, 3)}


# -- tips

BACKBONE4 = GroundTruth(backbone_nodes=(0, 1, 2, 3))


def test_tip_single_node():
    res = trim_tips(build_graph(5, [(0, 1), (1, 2), (2, 3), (1, 4)], BACKBONE4))
    assert res.removed_nodes == {4}
    assert res.removed_edges == {(1, 4)}


def test_without_backbone_every_short_dead_end_is_a_tip():
    # nothing marks 2->3 as the main chain, so it is trimmed along with 1->4
    res = trim_tips(build_graph(5, [(0, 1), (1, 2), (2, 3), (1, 4)]))
    assert res.removed_nodes == {2, 3, 4}


def test_lone_path_is_not_a_tip():
    res = trim_tips(path_graph(4))
    assert not res.removed_edges and not res.removed_nodes


def test_tip_longer_than_bound_kept():
    g = build_graph(6, [(0, 1), (1, 2), (2, 3), (1, 4), (4, 5)], BACKBONE4)
    assert not trim_tips(g, max_tip_len=1).removed_edges
    assert trim_tips(g, max_tip_len=2).removed_nodes == {4, 5}


def test_tip_bound_validated():
    with pytest.raises(ValueError):
        trim_tips(path_graph(3), max_tip_len=0)


def test_backbone_annotation_protects_ends_and_trims_reverse_tips():
    truth = GroundTruth(backbone_nodes=(0, 1, 2, 3))
    g = build_graph(6, [(0, 1), (1, 2), (2, 3), (4, 5), (5, 2)], truth)
    res = trim_tips(g)
    assert res.removed_nodes == {4, 5}
    assert res.removed_edges == {(4, 5), (5, 2)}
    assert res.retained_graph.edge_pairs == {(0, 1), (1, 2), (2, 3)}


# -- bubbles

def test_simple_bubble_discards_lower_ranked_path():
    g = build_graph(4, [(0, 1), (1, 3), (0, 2), (2, 3)])
    res = pop_bubbles(g)
    # equal lengths: the lexicographically smaller path (via 1) is kept
    assert res.removed_edges == {(0, 2), (2, 3)}


def test_longer_path_is_kept():
    g = build_graph(5, [(0, 1), (1, 2), (2, 4), (0, 3), (3, 4)])
    assert pop_bubbles(g).removed_edges == {(0, 3), (3, 4)}


def test_no_bubble_on_path():
    assert not pop_bubbles(path_graph(5)).removed_edges


def test_externally_connected_node_keeps_its_suffix():
    # discarded path 0->1->2->3, node 2 also feeds 9; kept path 0->4->5->6->3 has more internal nodes
    edges = [(0, 1), (1, 2), (2, 3), (2, 9), (0, 4), (4, 5), (5, 6), (6, 3)]
    res = pop_bubbles(build_graph(10, edges))
    assert res.removed_edges == {(0, 1), (1, 2)}
    assert res.retained_graph.has_edge(2, 3)


def test_direct_edge_is_not_a_bubble_path():
    # 0->2 has no internal node, so {0->1->2, 0->2} is a transitive triangle, not a bubble
    assert not pop_bubbles(build_graph(3, [(0, 1), (1, 2), (0, 2)])).removed_edges


# -- composition

def test_path_unchanged_by_pipeline():
    g = path_graph(50)
    assert simplify_pipeline(g) == g


def test_single_bubble_only_last_stage_acts():
    g = build_graph(4, [(0, 1), (1, 3), (0, 2), (2, 3)])
    results = run_pipeline(g)
    assert [bool(r.removed_edges) for r in results] == [False, False, True]


def test_composite_matches_composed_oracles():
    # chord 0->2, tip 3->10, bubble 5 ~> 8 via (6,7) and (11,)
    edges = [(i, i + 1) for i in range(9)] + [(0, 2), (3, 10), (5, 11), (11, 8)]
    g = build_graph(12, edges, GroundTruth(backbone_nodes=tuple(range(10))))
    results = run_pipeline(g)
    expected_t = oracle_transitive(g)
    after_t = results[0].retained_graph
    _, expected_tips = oracle_tips(after_t)
    after_tips = results[1].retained_graph
    assert results[0].removed_edges == expected_t == {(0, 2)}
    assert results[1].removed_edges == expected_tips == {(3, 10)}
    assert results[2].removed_edges == oracle_bubbles(after_tips) == {(5, 11), (11, 8)}


def test_run_algorithm_dispatch(triangle):
    assert run_algorithm(triangle, "transitive").removed_edges == {(0, 2)}
    assert run_algorithm(triangle, Algorithm.TIPS, SimplifyConfig(max_tip_len=3)).algorithm is Algorithm.TIPS
    with pytest.raises(ValueError):
        run_algorithm(triangle, "unknown")


# -- oracle agreement and idempotence (properties)

@given(small_digraphs())
def test_transitive_matches_oracle(g):
    assert find_transitive_edges(g) == oracle_transitive(g)


@given(small_digraphs(), st.integers(1, 4))
def test_tips_match_oracle(g, max_len):
    res = trim_tips(g, max_len)
    assert (res.removed_nodes, res.removed_edges) == oracle_tips(g, max_len)


@given(small_digraphs(max_nodes=8), st.integers(2, 4))
def test_bubbles_match_oracle(g, max_len):
    assert pop_bubbles(g, max_len).removed_edges == oracle_bubbles(g, max_len)


@given(small_digraphs())
def test_each_simplifier_idempotent(g):
    for algorithm in Algorithm:
        once = run_algorithm(g, algorithm).retained_graph
        assert run_algorithm(once, algorithm).retained_graph == once


def test_oracles_on_empty_graph():
    g = build_graph(0, [])
    assert oracle_transitive(g) == frozenset()
    assert oracle_tips(g) == (frozenset(), frozenset())
    assert oracle_bubbles(g) == frozenset()


def test_random_ten_node_graphs_agree():
    rng = np.random.default_rng(11)
    for _ in range(50):
        g = random_graph(rng, 10, 0.2)
        assert remove_transitive(g).removed_edges == oracle_transitive(g)
