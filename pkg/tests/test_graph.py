import math

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from socnet import CapExceeded, ContractError, ParseError
from socnet.graph import (FlowNetwork, Graph, enumerate_live_graphs, live_outcomes, load_edge_list,
                          max_flow, reach_levels, reachable_count, sample_live_graph,
                          shortest_path_lengths, to_mask, to_trivalency, to_weighted_cascade)


def test_edge_list_reindexes_in_order_of_appearance():
    g = load_edge_list("# comment\nx y 0.5\ny z\n\nz x 0.25  # tail\n")
    assert g.n == 3
    assert g.labels == ["x", "y", "z"]
    assert g.edges == [(0, 1, 0.5), (1, 2, 1.0), (2, 0, 0.25)]


@pytest.mark.parametrize("text, fragment", [
    ("a b 1.5\n", "outside"),
    ("a a\n", "self-loop"),
    ("a b\na b\n", "duplicate"),
    ("a b c d\n", "expected"),
    ("a b nope\n", "not a number"),
])
def test_edge_list_errors_name_the_line(text, fragment):
    with pytest.raises(ParseError, match=fragment):
        load_edge_list(text)


def test_undirected_duplicate_in_reverse_is_rejected():
    load_edge_list("a b\nb a\n", directed=True)
    with pytest.raises(ParseError, match="line 2"):
        load_edge_list("a b\nb a\n", directed=False)


def test_weighted_cascade_uses_target_degree():
    g = load_edge_list("0 1\n0 2\n0 3\n1 2\n", directed=False)
    wc = to_weighted_cascade(g)
    assert wc.directed
    for u, v, w in wc.edges:
        assert w == pytest.approx(1 / g.degree(v))
    incoming = wc.weight_matrix().sum(axis=0)
    assert np.allclose(incoming, 1.0)


def test_weighted_cascade_rejects_directed():
    with pytest.raises(ContractError):
        to_weighted_cascade(Graph(2, [(0, 1)]))


def test_trivalency_weights_come_from_the_three_levels():
    g = load_edge_list("0 1\n1 2\n", directed=False)
    tv = to_trivalency(g, np.random.default_rng(0))
    assert {w for _, _, w in tv.edges} <= {0.001, 0.01, 0.1}
    assert tv.m == 4


def test_live_graph_probabilities_sum_to_one():
    g = Graph(3, [(0, 1, 0.3), (1, 2, 0.6), (0, 2, 0.1)])
    total = math.fsum(x.probability for x in enumerate_live_graphs(g))
    assert total == pytest.approx(1.0)
    total = math.fsum(p for p, _ in live_outcomes(g))
    assert total == pytest.approx(1.0)


def test_certain_edges_are_not_enumerated():
    g = Graph(4, [(0, 1, 1.0), (1, 2, 0.5), (2, 3, 0.0)])
    outcomes = list(live_outcomes(g))
    assert len(outcomes) == 2
    assert all(outs[0] == 0b10 for _, outs in outcomes)


def test_enumeration_cap_refuses():
    g = Graph(30, [(i, i + 1, 0.5) for i in range(29)])
    with pytest.raises(CapExceeded) as err:
        list(live_outcomes(g, cap=10))
    assert err.value.required == 29


def test_reachable_count_on_a_sampled_live_graph():
    g = Graph(3, [(0, 1, 1.0), (1, 2, 1.0)])
    x = sample_live_graph(g, np.random.default_rng(1))
    assert reachable_count(x, [0]) == 3
    assert reachable_count(x, [2]) == 1


def test_reach_levels_by_step():
    outs = [0b010, 0b100, 0]
    assert reach_levels(outs, to_mask([0])) == [0b001, 0b010, 0b100]


def test_shortest_paths_mark_unreachable_as_infinite():
    g = load_edge_list("0 1\n1 2\n3 4\n", directed=False)
    d = shortest_path_lengths(g, 0)
    assert d[:3] == [0, 1, 2]
    assert math.isinf(d[3])


def test_max_flow_small_network():
    net = FlowNetwork(4, 0, 3)
    for u, v, c in [(0, 1, 3), (0, 2, 2), (1, 2, 1), (1, 3, 2), (2, 3, 3)]:
        net.add_arc(u, v, c)
    value, flows = max_flow(net)
    assert value == 5
    assert all(0 <= f <= c for f, (_, _, c) in zip(flows, net.arcs))


@settings(max_examples=40, deadline=None)
@given(st.integers(4, 9), st.integers(0, 10_000))
def test_max_flow_matches_networkx(n, seed):
    rng = np.random.default_rng(seed)
    net = FlowNetwork(n, 0, n - 1)
    ref = nx.DiGraph()
    ref.add_nodes_from(range(n))
    for u in range(n):
        for v in range(n):
            if u != v and rng.random() < 0.35:
                c = int(rng.integers(0, 5))
                net.add_arc(u, v, c)
                ref.add_edge(u, v, capacity=c)
    value, flows = max_flow(net)
    assert value == nx.maximum_flow_value(ref, 0, n - 1)
    balance = np.zeros(n)
    for (u, v, _), f in zip(net.arcs, flows):
        balance[u] -= f
        balance[v] += f
    assert np.all(balance[1:-1] == 0)
