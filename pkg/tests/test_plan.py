import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from migplan.errors import NoPath, UnknownVersion, ZeroWeight
from migplan.extract import LibraryId
from migplan.graph import MigrationEdge, MigrationGraph
from migplan.plan import edge_cost, k_shortest_plans, shortest_path, yen_k_shortest
from conftest import utc
from oracles import ranked_paths

LIB = LibraryId("g", "a")


def graph_from(weights: dict[tuple[str, str], int], extra_nodes=()) -> MigrationGraph:
    g = MigrationGraph(LIB, set(extra_nodes))
    for (s, t), w in weights.items():
        g.nodes.update((s, t))
        g.edges[(s, t)] = MigrationEdge(s, t, utc(2020, 1, 1), utc(2020, 1, 1), {f"c{i}" for i in range(w)})
    return g


def random_adjacency(rnd: random.Random, max_nodes=8, max_edges=20, max_weight=10):
    n = rnd.randint(2, max_nodes)
    nodes = [f"v{i}" for i in range(n)]
    pairs = [(a, b) for a in nodes for b in nodes if a != b]
    rnd.shuffle(pairs)
    adj = {v: {} for v in nodes}
    for a, b in pairs[: rnd.randint(0, min(max_edges, len(pairs)))]:
        adj[a][b] = rnd.randint(1, max_weight)
    return nodes, adj


class TestEdgeCost:
    def test_values(self):
        assert edge_cost(1) == 1.0
        assert edge_cost(14) == 1 / 14

    def test_zero(self):
        with pytest.raises(ZeroWeight):
            edge_cost(0)

    def test_path_sum(self):
        g = graph_from({("a", "b"): 2, ("b", "c"): 4, ("c", "d"): 4})
        assert shortest_path(g, "a", "d").popularity_value == 1.0


class TestShortestPath:
    def test_single_edge(self):
        p = shortest_path(graph_from({("A", "B"): 5}), "A", "B")
        assert p.path == ("A", "B")
        assert p.popularity_value == pytest.approx(0.2, abs=1e-15)

    def test_diamond_prefers_cheaper_two_hop(self):
        # direct A->B costs 1; A->C->B costs 1/4 + 1/4
        g = graph_from({("A", "B"): 1, ("A", "C"): 4, ("C", "B"): 4})
        p = shortest_path(g, "A", "B")
        assert p.path == ("A", "C", "B")
        assert p.popularity_value == 0.5

    def test_equal_cost_prefers_fewer_hops(self):
        g = graph_from({("A", "B"): 1, ("A", "C"): 2, ("C", "B"): 2})
        assert shortest_path(g, "A", "B").path == ("A", "B")

    def test_unreachable(self):
        g = graph_from({("A", "B"): 1}, extra_nodes=["Z"])
        with pytest.raises(NoPath):
            shortest_path(g, "A", "Z")

    def test_unknown(self):
        g = graph_from({("A", "B"): 1})
        with pytest.raises(UnknownVersion):
            shortest_path(g, "A", "9.9.9")
        with pytest.raises(UnknownVersion):
            shortest_path(g, "9.9.9", "B")


class TestKShortest:
    def test_source_equals_target(self):
        g = graph_from({("A", "B"): 1})
        [p] = k_shortest_plans(g, "A", "A", 5)
        assert p.path == ("A",) and p.popularity_value == 0

    def test_fewer_than_k(self):
        g = graph_from({("A", "B"): 1, ("A", "C"): 1, ("C", "B"): 1})
        assert len(k_shortest_plans(g, "A", "B", 10)) == 2

    def test_invalid_k(self):
        with pytest.raises(ValueError):
            k_shortest_plans(graph_from({("A", "B"): 1}), "A", "B", 0)

    def test_matches_brute_force_on_random_graphs(self):
        rnd = random.Random(20240601)
        for _ in range(300):
            nodes, adj = random_adjacency(rnd)
            s, t = rnd.sample(nodes, 2)
            expected = ranked_paths(adj, s, t)[:20]
            assert yen_k_shortest(adj, s, t, 20) == expected

    def test_loopless_and_monotone_on_cyclic_graph(self):
        weights = {("a", "b"): 1, ("b", "a"): 1, ("b", "c"): 2, ("c", "b"): 3, ("a", "c"): 1,
                   ("c", "d"): 5, ("b", "d"): 1, ("d", "a"): 2}
        plans = k_shortest_plans(graph_from(weights), "a", "d", 20)
        assert all(len(set(p.path)) == len(p.path) for p in plans)
        values = [p.popularity_value for p in plans]
        assert values == sorted(values)
        assert len(plans) == len(ranked_paths({k: {} for k in "abcd"} | _adj(weights), "a", "d"))


def _adj(weights):
    adj = {}
    for (s, t), w in weights.items():
        adj.setdefault(s, {})[t] = w
    return adj


@settings(max_examples=200, deadline=None)
@given(st.randoms(use_true_random=False), st.integers(2, 5))
def test_scaling_weights_keeps_order(rnd, factor):
    nodes, adj = random_adjacency(rnd, max_nodes=7, max_edges=16)
    s, t = rnd.sample(nodes, 2)
    scaled = {a: {b: w * factor for b, w in nbrs.items()} for a, nbrs in adj.items()}
    base = yen_k_shortest(adj, s, t, 10)
    big = yen_k_shortest(scaled, s, t, 10)
    assert [p for _, p in base] == [p for _, p in big]
    assert all(c2 == c1 / factor for (c1, _), (c2, _) in zip(base, big))


def test_popularity_value_matches_edge_costs(slf4j_graph):
    for plan in k_shortest_plans(slf4j_graph, "1.5.8", "1.7.25", 10):
        expected = sum(1 / slf4j_graph.weight(a, b) for a, b in plan.steps)
        assert abs(plan.popularity_value - expected) <= 1e-12
        assert all(step in slf4j_graph.edges for step in plan.steps)
