"""Weight graphs: uniform all-pairs and kernel-weighted union-kNN edges."""

import numpy as np
import pytest

from smmfit.errors import DegenerateInput
from smmfit.weights import (
    WeightGraph,
    WeightScheme,
    compute_weights,
    knn_edges,
    pairwise_distances,
)


def rows_1d(xs):
    """Points on the d=2 simplex so l2 distances are sqrt(2)*|xi - xj|."""
    xs = np.asarray(xs, dtype=float)
    return np.column_stack([xs, 1.0 - xs])


def test_uniform_all_pairs():
    g = compute_weights(np.eye(16), WeightScheme(kind="uniform"))
    assert g.edge_count == 120  # C(16, 2)
    assert np.all(g.w == 1.0)
    assert np.all(g.l1 < g.l2)


def test_uniform_two_rows():
    g = compute_weights(np.eye(2), WeightScheme(kind="uniform"))
    assert g.edges() == [(0, 1, 1.0)]


def test_needs_two_rows():
    with pytest.raises(DegenerateInput):
        compute_weights(np.ones((1, 3)), WeightScheme(kind="uniform"))


def test_scheme_validation():
    with pytest.raises(ValueError):
        WeightScheme(kind="banana")
    with pytest.raises(ValueError):
        WeightScheme(distance="l3")
    with pytest.raises(ValueError):
        WeightScheme(kernel="cubic")
    with pytest.raises(ValueError):
        WeightScheme(phi=0.0)
    with pytest.raises(ValueError):
        WeightScheme(k=0)
    assert WeightScheme(kind="uniform").label() == "uniform"
    assert "knn3_l2_gaussian" in WeightScheme().label()


def test_pairwise_distance_metrics():
    rows = np.array([[0.0, 1.0, 0.0], [0.5, 0.25, 0.25]])
    d12 = np.array([0.5, 0.75, 0.25])
    assert pairwise_distances(rows, "l2")[0, 1] == pytest.approx(np.sqrt((d12**2).sum()))
    assert pairwise_distances(rows, "l1")[0, 1] == pytest.approx(d12.sum())
    assert pairwise_distances(rows, "linf")[0, 1] == pytest.approx(0.75)
    assert np.all(np.diag(pairwise_distances(rows, "l2")) == 0.0)


def test_knn_union_semantics():
    # chain 0 - 0.1 - 0.5 - 1.0: with k=1 the union picks up (1,2) because
    # point 2's nearest is point 1 even though the reverse does not hold
    dist = pairwise_distances(rows_1d([0.0, 0.1, 0.5, 1.0]), "l2")
    assert knn_edges(dist, 1) == [(0, 1), (1, 2), (2, 3)]


def test_knn_ties_break_by_index():
    # points 1 and 2 are equidistant from 0; the smaller index wins
    rows = np.array([[0.5, 0.5], [1.0, 0.0], [0.0, 1.0]])
    dist = pairwise_distances(rows, "l2")
    assert knn_edges(dist, 1) == [(0, 1), (0, 2)]


def test_each_node_adjacent_to_its_own_nearest():
    rng = np.random.default_rng(0)
    rows = rng.dirichlet(np.ones(4), size=12)
    k = 3
    dist = pairwise_distances(rows, "l2")
    g = compute_weights(rows, WeightScheme(k=k))
    dense = g.to_dense()
    for i in range(12):
        order = np.argsort(dist[i])
        nearest = [j for j in order if j != i][:k]
        assert all(dense[i, j] > 0 for j in nearest)


def test_kernel_values():
    rows = rows_1d([0.0, 0.1, 0.5, 1.0])
    dist = pairwise_distances(rows, "l2")
    g = compute_weights(rows, WeightScheme(kernel="gaussian", phi=10.0, k=1))
    for a, b, w in g.edges():
        assert w == pytest.approx(np.exp(-10.0 * dist[a, b] ** 2))
    g = compute_weights(rows, WeightScheme(kernel="exponential", phi=10.0, k=1))
    for a, b, w in g.edges():
        assert w == pytest.approx(np.exp(-10.0 * dist[a, b]))
    assert np.all(g.w > 0) and np.all(g.w <= 1.0)


def test_permutation_equivariance():
    rng = np.random.default_rng(1)
    rows = rng.dirichlet(np.ones(3), size=9)
    perm = rng.permutation(9)
    scheme = WeightScheme(k=2, phi=5.0)
    dense = compute_weights(rows, scheme).to_dense()
    dense_p = compute_weights(rows[perm], scheme).to_dense()
    assert np.allclose(dense_p, dense[np.ix_(perm, perm)])


def test_graph_validation():
    with pytest.raises(ValueError):
        WeightGraph(l1=[1], l2=[0], w=[1.0], node_count=2)  # l1 >= l2
    with pytest.raises(ValueError):
        WeightGraph(l1=[0], l2=[1], w=[0.0], node_count=2)  # zero weight stored
    with pytest.raises(ValueError):
        WeightGraph(l1=[0, 0], l2=[1, 1], w=[1.0, 2.0], node_count=2)  # duplicate


def test_dense_roundtrip():
    g = WeightGraph(l1=[0, 1], l2=[2, 2], w=[0.5, 2.0], node_count=3)
    back = WeightGraph.from_dense(g.to_dense())
    assert back.edges() == g.edges()
    with pytest.raises(ValueError):
        WeightGraph.from_dense(np.array([[0.0, 1.0], [2.0, 0.0]]))  # asymmetric


def test_accepts_empirical_transitions_object():
    from smmfit.markov import Alphabet, count_transitions, empirical_transitions, encode_sequence

    seq = encode_sequence("AABABBAABBABAB", Alphabet(("A", "B")))
    emp = empirical_transitions(count_transitions(seq, 1))
    g = compute_weights(emp, WeightScheme(kind="uniform"))
    assert g.node_count == 2 and g.edge_count == 1
