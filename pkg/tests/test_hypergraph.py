import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from driftrec import experiments, hypergraph

from conftest import random_laplacian


def test_edges_from_fixture_sessions():
    # job indices of the fixture sessions
    sessions = [[0, 1, 0], [4, 4], [2, 3, 2], [1, 0], [3, 2]]
    assert hypergraph.build_session_hyperedges(sessions) == [(0, 1), (4,), (2, 3), (0, 1), (2, 3)]
    # successors: 0->{1}, 1->{0}, 4->{4}, 2->{3}, 3->{2}
    assert hypergraph.build_transition_hyperedges(sessions) == [(1,), (0,), (3,), (2,), (4,)]


def test_single_interaction_session():
    assert hypergraph.build_session_hyperedges([[3]]) == [(3,)]
    assert hypergraph.build_transition_hyperedges([[3]]) == []


def _laplacian_by_definition(n, edges, w):
    """Entry-wise sum over hyperedges, no matrix algebra."""
    lap = np.zeros((n, n))
    for e, we in zip(edges, w):
        for u in e:
            lap[u, u] += we
            for v in e:
                lap[u, v] -= we / len(e)
    return lap


def test_laplacian_matches_definition():
    edges = [(0, 1, 2), (2, 3), (1,), (0, 3, 4)]
    w = [1.0, 2.0, 0.5, 1.5]
    hg = hypergraph.build_hypergraph(5, edges[:2], edges[2:], w)
    lap = hypergraph.laplacian(hg.incidence, hg.weights)
    np.testing.assert_allclose(lap.dense(), _laplacian_by_definition(5, edges, w), atol=1e-14)
    assert hg.kinds == ["session", "session", "transition", "transition"]
    assert hg.subset("transition").edges() == [(1,), (0, 3, 4)]


def test_empty_edge_and_bad_node():
    with pytest.raises(ValueError):
        hypergraph.build_hypergraph(3, [()])
    with pytest.raises(ValueError):
        hypergraph.build_hypergraph(3, [(0, 3)])


def test_density_by_hand():
    # session edges {0,1,2}: pairs 01 02 12; transition {2,3}: adds 23
    assert hypergraph.density(4, [(0, 1, 2)]) == pytest.approx(3 / 6)
    assert hypergraph.density(4, [(0, 1, 2), (2, 3)]) == pytest.approx(4 / 6)
    with pytest.raises(ValueError):
        hypergraph.density(1, [])


def test_triplets_are_sorted_by_edge_then_node():
    hg = hypergraph.build_hypergraph(3, [(2, 0)], [(1,)])
    assert hg.to_triplets() == "0 0 1.0\n2 0 1.0\n1 1 1.0\n"


def test_group_signal():
    sig = hypergraph.build_group_signal(np.eye(2), np.array([0, 3]))
    np.testing.assert_allclose(sig, [[1, 0, 0], [0, 1, np.log(4)]])
    topics = hypergraph.mean_group_topics(np.array([[1.0, 0], [0, 1], [1, 1]]), np.array([0, 0, 1]), 2)
    np.testing.assert_allclose(topics, [[0.5, 0.5], [1, 1]])


@settings(max_examples=100, deadline=None)
@given(n=st.integers(2, 40), seed=st.integers(0, 10**6))
def test_laplacian_algebra(n, seed):
    lap = random_laplacian(n, seed)
    assert np.array_equal(lap, lap.T)
    assert np.linalg.eigvalsh(lap).min() >= -1e-10
    np.testing.assert_allclose(lap @ np.ones(n), 0.0, atol=1e-10)


@settings(max_examples=50, deadline=None)
@given(
    sessions=st.lists(st.lists(st.integers(0, 9), min_size=1, max_size=8), min_size=1, max_size=10),
)
def test_transition_edges_never_lower_density(sessions):
    sess = hypergraph.build_session_hyperedges(sessions)
    both = sess + hypergraph.build_transition_hyperedges(sessions)
    assert hypergraph.density(10, both) >= hypergraph.density(10, sess)


def test_random_hypergraph_is_seeded():
    a = experiments.random_hypergraph(12, np.random.default_rng(4))
    b = experiments.random_hypergraph(12, np.random.default_rng(4))
    assert a.edges() == b.edges() and np.array_equal(a.weights, b.weights)
