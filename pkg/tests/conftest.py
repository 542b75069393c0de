import numpy as np
import pytest

from leaderfollow.digraph import LeaderTopology, WeightedDigraph

G1_ARCS = ((1, 2, 1.0), (2, 1, 1.0), (4, 2, 1.0), (4, 3, 1.0))
G2_ARCS = ((1, 2, 1.0), (2, 1, 1.0), (3, 4, 1.0), (4, 3, 1.0))
B_EXAMPLE = (1.0, 0.0, 1.0, 0.0)

L1 = np.array([[1, -1, 0, 0], [-1, 1, 0, 0], [0, 0, 0, 0], [0, -1, -1, 2]], dtype=float)
L2 = np.array([[1, -1, 0, 0], [-1, 1, 0, 0], [0, 0, 1, -1], [0, 0, -1, 1]], dtype=float)

# Lyapunov solution for H1 = L1 + B1 to 4 decimals
P_BAR_PRINTED = np.array([
    [0.5379, 0.5758, 0.0439, 0.0227],
    [0.5758, 1.1667, 0.1091, 0.0909],
    [0.0439, 0.1091, 0.5833, 0.0833],
    [0.0227, 0.0909, 0.0833, 0.2500],
])


@pytest.fixture
def g1():
    return WeightedDigraph(4, G1_ARCS)


@pytest.fixture
def g2():
    return WeightedDigraph(4, G2_ARCS)


@pytest.fixture
def t1(g1):
    return LeaderTopology(g1, B_EXAMPLE)


@pytest.fixture
def t2(g2):
    return LeaderTopology(g2, B_EXAMPLE)


def random_digraph(rng, n_max=6, integer_weights=False):
    n = int(rng.integers(1, n_max + 1))
    p = rng.uniform(0.1, 0.7)
    arcs = []
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            if i != j and rng.random() < p:
                w = float(rng.integers(1, 4)) if integer_weights else float(rng.uniform(0.2, 3.0))
                arcs.append((i, j, w))
    return WeightedDigraph(n, tuple(arcs))


def random_leader_topology(rng, n_max=6):
    g = random_digraph(rng, n_max)
    mask = rng.random(g.n) < rng.uniform(0.0, 0.6)
    b = np.where(mask, rng.uniform(0.2, 2.0, g.n), 0.0)
    return LeaderTopology(g, tuple(b))


def reachability_closure(n, arcs):
    """Boolean transitive closure by Warshall's algorithm; reach[i][j] means a path i -> j."""
    reach = [[i == j for j in range(n + 1)] for i in range(n + 1)]
    for i, j, _ in arcs:
        reach[i][j] = True
    for m in range(n + 1):
        for i in range(n + 1):
            if reach[i][m]:
                for j in range(n + 1):
                    if reach[m][j]:
                        reach[i][j] = True
    return reach


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
