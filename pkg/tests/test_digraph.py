import numpy as np
import pytest

from leaderfollow.digraph import (
    GraphError,
    LeaderTopology,
    WeightedDigraph,
    adjacency_matrix,
    check_common_order,
    cluster_neighbors,
    condensation_has_single_sink,
    globally_reachable_nodes,
    has_globally_reachable_node,
    is_balanced,
    is_strongly_connected,
    laplacian,
    leader_globally_reachable,
    neighbors,
    strong_components,
)

from conftest import L1, L2, random_digraph, reachability_closure


def oracle_components(g):
    reach = reachability_closure(g.n, g.arcs)
    comps = []
    for v in range(1, g.n + 1):
        comp = frozenset(u for u in range(1, g.n + 1) if reach[v][u] and reach[u][v])
        if comp not in comps:
            comps.append(comp)
    return sorted(comps, key=min)


def oracle_global_node(g):
    reach = reachability_closure(g.n, g.arcs)
    return any(all(reach[u][v] for u in range(1, g.n + 1)) for v in range(1, g.n + 1))


class TestConstruction:
    def test_rejects_self_loop(self):
        with pytest.raises(GraphError, match="self-loop"):
            WeightedDigraph(2, ((1, 1, 1.0),))

    @pytest.mark.parametrize("w", [0.0, -1.0, float("nan"), float("inf")])
    def test_rejects_nonpositive_weight(self, w):
        with pytest.raises(GraphError):
            WeightedDigraph(2, ((1, 2, w),))

    def test_rejects_duplicate_arc(self):
        with pytest.raises(GraphError, match="duplicate"):
            WeightedDigraph(2, ((1, 2, 1.0), (1, 2, 2.0)))

    def test_rejects_out_of_range(self):
        with pytest.raises(GraphError):
            WeightedDigraph(2, ((1, 3, 1.0),))

    def test_leader_weights_length_and_sign(self, g1):
        with pytest.raises(GraphError):
            LeaderTopology(g1, (1.0, 0.0))
        with pytest.raises(GraphError):
            LeaderTopology(g1, (1.0, -1.0, 0.0, 0.0))

    def test_from_adjacency_round_trip(self, g1):
        assert WeightedDigraph.from_adjacency(adjacency_matrix(g1)) == g1

    def test_common_order(self, t1):
        other = LeaderTopology(WeightedDigraph(3), (1.0, 1.0, 1.0))
        assert check_common_order([t1, t1]) == 4
        with pytest.raises(GraphError, match="share n"):
            check_common_order([t1, other])


def test_adjacency_example(g1):
    a = adjacency_matrix(g1)
    expected = np.zeros((4, 4))
    for i, j in [(1, 2), (2, 1), (4, 2), (4, 3)]:
        expected[i - 1, j - 1] = 1.0
    np.testing.assert_array_equal(a, expected)
    np.testing.assert_array_equal(np.diag(a), 0.0)


def test_adjacency_empty():
    np.testing.assert_array_equal(adjacency_matrix(WeightedDigraph(3)), np.zeros((3, 3)))


def test_adjacency_matches_arc_membership():
    rng = np.random.default_rng(11)
    for _ in range(20):
        g = random_digraph(rng)
        a = adjacency_matrix(g)
        stored = {(i, j): w for i, j, w in g.arcs}
        for i in range(1, g.n + 1):
            for j in range(1, g.n + 1):
                assert (a[i - 1, j - 1] > 0) == ((i, j) in stored)
                if (i, j) in stored:
                    assert a[i - 1, j - 1] == stored[(i, j)]


def test_laplacians_of_example(g1, g2):
    np.testing.assert_array_equal(laplacian(g1), L1)
    np.testing.assert_array_equal(laplacian(g2), L2)
    np.testing.assert_array_equal(laplacian(WeightedDigraph(3)), np.zeros((3, 3)))


def test_neighbors(g1):
    assert neighbors(g1, 4) == {2, 3}
    assert neighbors(g1, 3) == frozenset()
    assert neighbors(WeightedDigraph(3, ((1, 2, 1.0),)), 3) == frozenset()
    with pytest.raises(GraphError):
        neighbors(g1, 5)
    with pytest.raises(GraphError):
        neighbors(g1, 0)


def test_cluster_neighbors(g1):
    assert cluster_neighbors(g1, {1, 2}) == {1, 2}
    assert cluster_neighbors(g1, set()) == frozenset()
    assert cluster_neighbors(g1, {4}) == neighbors(g1, 4)
    with pytest.raises(GraphError):
        cluster_neighbors(g1, {7})


def test_strong_components_examples(g1, g2):
    assert strong_components(g1) == [{1, 2}, {3}, {4}]
    assert strong_components(g2) == [{1, 2}, {3, 4}]
    assert strong_components(WeightedDigraph(1)) == [{1}]


def test_strong_components_long_cycle_no_recursion_limit():
    n = 5000
    g = WeightedDigraph(n, tuple((i, i % n + 1, 1.0) for i in range(1, n + 1)))
    assert strong_components(g) == [frozenset(range(1, n + 1))]


def test_strongly_connected(g1):
    assert not is_strongly_connected(g1)
    assert is_strongly_connected(WeightedDigraph(2, ((1, 2, 1.0), (2, 1, 1.0))))
    assert is_strongly_connected(WeightedDigraph(1))


def test_balanced(g1, g2):
    assert is_balanced(g2)
    assert not is_balanced(g1)
    assert is_balanced(WeightedDigraph(4))


def test_leader_reachability(t1, t2, g1):
    assert leader_globally_reachable(t1)
    assert leader_globally_reachable(t2)
    assert not leader_globally_reachable(LeaderTopology(g1, (0.0,) * 4))


def test_globally_reachable_node(g1, g2):
    # {1, 2} and {3} are both sink components of G1
    assert not has_globally_reachable_node(g1)
    assert globally_reachable_nodes(g1) == frozenset()
    assert oracle_global_node(g1) is False
    g1_plus = WeightedDigraph(4, g1.arcs + ((2, 3, 1.0),))
    assert globally_reachable_nodes(g1_plus) == {3}
    assert not has_globally_reachable_node(g2)
    assert has_globally_reachable_node(WeightedDigraph(1))


@pytest.mark.parametrize("seed", range(3))
def test_random_graph_properties(seed):
    rng = np.random.default_rng(100 + seed)
    for _ in range(100):
        g = random_digraph(rng)
        lap = laplacian(g)
        np.testing.assert_allclose(lap.sum(axis=1), 0.0, atol=1e-12)
        assert is_balanced(g) == bool(np.all(np.abs(lap.sum(axis=0)) <= 1e-12 * max(1.0, np.abs(lap).max())))

        comps = strong_components(g)
        assert comps == oracle_components(g)
        members = [v for c in comps for v in c]
        assert sorted(members) == list(range(1, g.n + 1))

        assert condensation_has_single_sink(g) == oracle_global_node(g)
        assert has_globally_reachable_node(g) == oracle_global_node(g)
        assert is_strongly_connected(g) == (len(oracle_components(g)) == 1)


def test_balanced_random_integer_cycles():
    rng = np.random.default_rng(5)
    for _ in range(50):
        n = int(rng.integers(2, 7))
        weights = {}
        for _ in range(int(rng.integers(1, 4))):
            cyc = rng.permutation(n)[: int(rng.integers(2, n + 1))] + 1
            w = float(rng.integers(1, 4))
            for a, b in zip(cyc, np.roll(cyc, -1)):
                weights[(int(a), int(b))] = weights.get((int(a), int(b)), 0.0) + w
        g = WeightedDigraph(n, tuple((i, j, w) for (i, j), w in weights.items()))
        assert is_balanced(g)
