import pytest

from popctl.graphs import GraphOps
from popctl.nfa import GadgetSpec, generate


@pytest.fixture(scope="session")
def split_nfa():
    return generate(GadgetSpec("split"))


@pytest.fixture(scope="session")
def time_nfa():
    return generate(GadgetSpec("time"))


@pytest.fixture(scope="session")
def memory_nfa():
    return generate(GadgetSpec("memory-example"))


@pytest.fixture(scope="session")
def two_state_loop():
    """Two states, one letter, every move allowed; the graphs G and H
    used throughout the capacity tests."""
    ops = GraphOps(2)
    g = ops.from_edges([(0, 0), (0, 1), (1, 1)])
    h = ops.from_edges([(0, 0), (1, 0), (1, 1)])
    return ops, g, h


@pytest.fixture(scope="session")
def alternation_history():
    """Five-step transfer-graph history over q0, qtop, qbot, k (indices
    0..3) produced by alternating the branching letter with the parking
    letter while the adversary splits; its ground-truth tracking list is
    (G[1,5], G[3,5])."""
    ops = GraphOps(4)
    e = ops.from_edges
    g1 = e([(0, 1), (0, 2)])
    g2 = e([(1, 0), (2, 3)])
    g3 = e([(0, 1), (0, 2), (3, 3)])
    g4 = e([(1, 0), (2, 3), (3, 3)])
    g5 = e([(0, 1), (0, 2), (3, 3)])
    return ops, [g1, g2, g3, g4, g5]


@pytest.fixture(scope="session")
def divergence_history():
    """Three-step history over three states where the incremental tracking
    list (G[2,3]) differs from the exact one (G[1,3], G[2,3])."""
    ops = GraphOps(3)
    e = ops.from_edges
    g1 = e([(0, 0), (0, 2), (1, 1)])
    g2 = e([(0, 0), (1, 1), (1, 0), (2, 2), (2, 0)])
    g3 = e([(0, 0), (1, 1), (1, 0), (2, 1)])
    return ops, [g1, g2, g3]
