"""Spanning trees, edge thresholding, centrality, and sector aggregation."""

from __future__ import annotations

import numpy as np
import pytest

from cotrading import (
    ConvergenceError,
    eigenvector_centrality,
    max_spanning_tree,
    sector_meta_network,
    threshold_top_fraction,
)
from cotrading.cooccurrence import CoTradingMatrix

import oracles


def sym(values) -> np.ndarray:
    a = np.asarray(values, dtype=np.float64)
    return (a + a.T) / 2


def random_weights(rng, n) -> np.ndarray:
    a = rng.uniform(0.1, 10.0, size=(n, n))
    a = (a + a.T) / 2
    np.fill_diagonal(a, 0.0)
    return a


def wrap(values, label="d") -> CoTradingMatrix:
    return CoTradingMatrix(label=label, values=np.asarray(values, dtype=np.float64),
                           delta_ns=500_000_000, direction_pair=("all", "all"),
                           measure="count")


# -- maximum spanning tree ----------------------------------------------------------

def test_mst_triangle():
    w = np.zeros((3, 3))
    w[0, 1] = w[1, 0] = 3.0  # AB
    w[1, 2] = w[2, 1] = 2.0  # BC
    w[0, 2] = w[2, 0] = 1.0  # AC
    tree = max_spanning_tree(w)
    assert sorted((i, j) for i, j, _ in tree.edges) == [(0, 1), (1, 2)]
    assert sum(wt for _, _, wt in tree.edges) == 5.0


def test_mst_path_graph():
    w = np.zeros((4, 4))
    for i in range(3):
        w[i, i + 1] = w[i + 1, i] = float(i + 1)
    tree = max_spanning_tree(w)
    assert sorted((i, j) for i, j, _ in tree.edges) == [(0, 1), (1, 2), (2, 3)]


def test_mst_matches_enumeration(rng):
    for n in (3, 4, 5):
        for _ in range(10):
            w = random_weights(rng, n)
            tree = max_spanning_tree(w)
            assert len(tree.edges) == n - 1
            total = sum(wt for _, _, wt in tree.edges)
            assert total == pytest.approx(
                oracles.max_tree_weight_enumerated(w), rel=1e-12)


def test_mst_monotone_transform_invariance(rng):
    w = random_weights(rng, 6)
    base = {(i, j) for i, j, _ in max_spanning_tree(w).edges}
    cubed = {(i, j) for i, j, _ in max_spanning_tree(w ** 3).edges}
    scaled = {(i, j) for i, j, _ in max_spanning_tree(2.5 * w).edges}
    assert base == cubed == scaled


def test_mst_disconnected_gives_forest():
    w = np.zeros((4, 4))
    w[0, 1] = w[1, 0] = 1.0
    w[2, 3] = w[3, 2] = 2.0
    with pytest.warns(UserWarning):
        forest = max_spanning_tree(w)
    assert sorted((i, j) for i, j, _ in forest.edges) == [(0, 1), (2, 3)]


def test_mst_tiny_matrix_rejected():
    with pytest.raises(ValueError):
        max_spanning_tree(np.zeros((1, 1)))


# -- thresholding ----------------------------------------------------------------

def test_threshold_p1_keeps_all_positive_edges(rng):
    w = random_weights(rng, 5)
    w[0, 1] = w[1, 0] = 0.0
    kept = threshold_top_fraction(w, 1.0)
    want = {(i, j) for i in range(5) for j in range(i + 1, 5) if w[i, j] > 0}
    assert {(i, j) for i, j, _ in kept.edges} == want


def test_threshold_top_two_of_ten():
    w = np.zeros((5, 5))
    pairs = [(i, j) for i in range(5) for j in range(i + 1, 5)]
    for rank, (i, j) in enumerate(pairs, start=1):
        w[i, j] = w[j, i] = float(rank)
    kept = threshold_top_fraction(w, 0.2)
    assert {(i, j) for i, j, _ in kept.edges} == {(2, 4), (3, 4)}


def test_threshold_tie_break_lexicographic():
    w = np.ones((4, 4))
    np.fill_diagonal(w, 0.0)
    kept = threshold_top_fraction(w, 0.5)  # ceil(0.5 * 6) = 3 edges
    assert [(i, j) for i, j, _ in kept.edges] == [(0, 1), (0, 2), (0, 3)]


def test_threshold_monotone_in_p(rng):
    w = random_weights(rng, 8)
    sets = [{(i, j) for i, j, _ in threshold_top_fraction(w, p).edges}
            for p in (0.1, 0.3, 0.6, 1.0)]
    for small, big in zip(sets, sets[1:]):
        assert small <= big


def test_threshold_p_bounds():
    w = np.ones((3, 3))
    np.fill_diagonal(w, 0)
    with pytest.raises(ValueError):
        threshold_top_fraction(w, 0.0)
    with pytest.raises(ValueError):
        threshold_top_fraction(w, 1.5)


# -- eigenvector centrality --------------------------------------------------------

def test_centrality_two_node_symmetric():
    v = eigenvector_centrality(np.asarray([[0.0, 1.0], [1.0, 0.0]]))
    assert v == pytest.approx([1 / np.sqrt(2), 1 / np.sqrt(2)], abs=1e-10)


def test_centrality_eigen_residual(rng):
    tol = 1e-10
    for _ in range(10):
        a = rng.uniform(0.05, 1.0, size=(6, 6))
        a = (a + a.T) / 2
        np.fill_diagonal(a, 0.0)
        v = eigenvector_centrality(a, tol=tol)
        lam = float(v @ a @ v)
        assert np.max(np.abs(a @ v - lam * v)) < 10 * tol
        assert (v >= -1e-15).all()
        assert np.linalg.norm(v) == pytest.approx(1.0, abs=1e-12)


def test_centrality_matches_jacobi_oracle(rng):
    a = rng.uniform(0.1, 2.0, size=(4, 4))
    a = (a + a.T) / 2
    np.fill_diagonal(a, 0.0)
    v = eigenvector_centrality(a)
    evals, evecs = oracles.jacobi_eigh(a)
    dom = evecs[:, -1]
    if dom.sum() < 0:
        dom = -dom
    assert v == pytest.approx(dom, abs=1e-8)


def test_centrality_scale_invariance(rng):
    a = rng.uniform(0.1, 1.0, size=(5, 5))
    a = (a + a.T) / 2
    np.fill_diagonal(a, 0.0)
    v1 = eigenvector_centrality(a)
    v2 = eigenvector_centrality(17.0 * a)
    assert v1 / v1.sum() == pytest.approx(v2 / v2.sum(), abs=1e-9)


def test_centrality_nonconvergence_raises():
    # the uniform start is far from the path graph's dominant eigenvector,
    # so two iterations cannot reach a 1e-14 tolerance
    a = np.asarray([[0.0, 1.0, 0.0],
                    [1.0, 0.0, 1.0],
                    [0.0, 1.0, 0.0]])
    with pytest.raises(ConvergenceError):
        eigenvector_centrality(a, tol=1e-14, max_iter=2)


# -- sector meta-network ---------------------------------------------------------

def test_meta_single_sector_constant():
    c = 0.7
    w = np.full((4, 4), c)
    np.fill_diagonal(w, 0.0)
    meta = sector_meta_network(wrap(w), ["FIN"] * 4)
    assert meta.values.shape == (1, 1)
    assert meta.values[0, 0] == 0.0  # zero-diagonal convention
    assert meta.within_sector[0] == pytest.approx(c, abs=1e-15)


def test_meta_zero_cross_sector():
    w = np.zeros((4, 4))
    w[0, 1] = w[1, 0] = 1.0  # within sector A
    w[2, 3] = w[3, 2] = 2.0  # within sector B
    meta = sector_meta_network(wrap(w), ["A", "A", "B", "B"])
    assert meta.values[0, 1] == 0.0
    assert meta.within_sector == pytest.approx([1.0, 2.0])


def test_meta_hand_example():
    # stocks 0,1 in A; 2,3 in B
    w = sym([[0, 2, 3, 4],
             [2, 0, 5, 6],
             [3, 5, 0, 8],
             [4, 6, 8, 0]])
    meta = sector_meta_network(wrap(w), ["A", "A", "B", "B"])
    assert meta.symbols == ("A", "B")
    # cross mean over pairs (0,2),(0,3),(1,2),(1,3) = (3+4+5+6)/4
    assert meta.values[0, 1] == pytest.approx(4.5)
    assert meta.within_sector == pytest.approx([2.0, 8.0])


def test_meta_singleton_sector_diagonal_zero():
    w = sym([[0, 1, 1], [1, 0, 1], [1, 1, 0]])
    meta = sector_meta_network(wrap(w), ["A", "A", "B"])
    assert meta.within_sector[1] == 0.0


def test_meta_unlabeled_symbol_rejected():
    w = np.zeros((3, 3))
    with pytest.raises(ValueError):
        sector_meta_network(wrap(w), ["A", "A"])  # one label short
