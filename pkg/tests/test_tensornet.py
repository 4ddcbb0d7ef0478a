import math

import numpy as np
import pytest

from amplab.ensembles import RectEnsembleSpec, SymEnsembleSpec, sample_rectangular, sample_symmetric
from amplab.polynomial import MultiPoly
from amplab.tensornet import (AlternatingTensorNetwork, DiagonalTensorNetwork, TreeError, network_from_dict,
                              nonisomorphic_trees, prufer_to_edges, random_tree, tn_eval, tn_eval_alt,
                              tn_eval_brute, tn_validate, trees_up_to)

ONE = MultiPoly.constant(1.0, 1)
X = MultiPoly.variable(0, 1)
X2 = MultiPoly.monomial([2])


def _random_label(rng, k=1):
    terms = [(tuple(rng.integers(0, 3, size=k)), float(rng.normal())) for _ in range(3)]
    return MultiPoly(k, terms)


def test_single_vertex_is_label_average(rng):
    x = rng.standard_normal(7)
    T = DiagonalTensorNetwork([X2], [])
    assert tn_eval(T, np.eye(7), x) == pytest.approx(np.mean(x ** 2), rel=1e-14)


def test_line_by_hand():
    W = np.array([[0.0, 1.0, 2.0], [1.0, 0.0, -1.0], [2.0, -1.0, 0.5]])
    x = np.array([1.0, 2.0, 3.0])
    T = DiagonalTensorNetwork([X, ONE, X2], [(0, 1), (1, 2)])
    expected = (x @ W) @ (W @ x ** 2) / 3
    assert tn_eval(T, W, x) == pytest.approx(expected, rel=1e-13)


def test_agrees_with_brute_force():
    rng = np.random.default_rng(11)
    for _ in range(100):
        nv = int(rng.integers(1, 6))
        n = int(rng.integers(1, 7))
        k = int(rng.integers(1, 3))
        T = DiagonalTensorNetwork([_random_label(rng, k) for _ in range(nv)], random_tree(nv, rng), k)
        G = rng.standard_normal((n, n))
        W = (G + G.T) / 2
        x = rng.standard_normal((n, k))
        fast, slow = tn_eval(T, W, x), tn_eval_brute(T, W, x)
        assert abs(fast - slow) <= 1e-10 * max(1.0, abs(slow))


def test_alternating_agrees_with_brute_force():
    rng = np.random.default_rng(12)
    for _ in range(60):
        nv = int(rng.integers(2, 6))
        edges = random_tree(nv, rng)
        # two-colour the tree
        sides = [None] * nv
        sides[0] = "U"
        pending = [0]
        while pending:
            v = pending.pop()
            for a, b in edges:
                w = b if a == v else a if b == v else None
                if w is not None and sides[w] is None:
                    sides[w] = "V" if sides[v] == "U" else "U"
                    pending.append(w)
        T = AlternatingTensorNetwork(sides, [_random_label(rng) for _ in range(nv)], edges)
        m, n = int(rng.integers(1, 5)), int(rng.integers(1, 6))
        W = rng.standard_normal((m, n))
        x, y = rng.standard_normal(m), rng.standard_normal(n)
        fast, slow = tn_eval_alt(T, W, x, y), tn_eval_brute(T, W, x, y)
        assert abs(fast - slow) <= 1e-10 * max(1.0, abs(slow))


def test_alternating_single_edge_by_hand():
    W = np.array([[1.0, 2.0, 0.0], [0.0, -1.0, 3.0]])
    x, y = np.array([1.0, 2.0]), np.array([1.0, 1.0, 2.0])
    T = AlternatingTensorNetwork(["U", "V"], [X, X], [(0, 1)])
    assert tn_eval_alt(T, W, x, y) == pytest.approx(x @ W @ y / 3)


def test_root_independence(rng):
    n = 50
    G = rng.standard_normal((n, n))
    W = (G + G.T) / math.sqrt(2 * n)
    x = rng.standard_normal(n)
    T = DiagonalTensorNetwork([_random_label(rng) for _ in range(6)], random_tree(6, rng))
    vals = [tn_eval(T, W, x, root=r) for r in range(6)]
    assert max(vals) - min(vals) <= 1e-12 * max(1.0, abs(vals[0]))


def test_linearity_in_labels(rng):
    n = 30
    G = rng.standard_normal((n, n))
    W = (G + G.T) / math.sqrt(2 * n)
    x = rng.standard_normal(n)
    labels = [_random_label(rng) for _ in range(4)]
    edges = [(0, 1), (1, 2), (1, 3)]
    q1, q2 = labels[1].split(2)
    a = tn_eval(DiagonalTensorNetwork(labels[:1] + [q1] + labels[2:], edges), W, x)
    b = tn_eval(DiagonalTensorNetwork(labels[:1] + [q2] + labels[2:], edges), W, x)
    assert tn_eval(DiagonalTensorNetwork(labels, edges), W, x) == pytest.approx(a + b, rel=1e-10, abs=1e-12)


def test_operator_input_matches_dense(rng):
    op = sample_symmetric(SymEnsembleSpec("GOE"), 40, 3)
    x = rng.standard_normal(40)
    T = DiagonalTensorNetwork([X, X2, ONE, X], [(0, 1), (1, 2), (2, 3)])
    assert tn_eval(T, op, x) == pytest.approx(tn_eval(T, op.A, x), rel=1e-12)


def test_variance_profile_expectation():
    # E over W of the 3-vertex path with profile S, conditional on x
    n = 2000
    S = np.where((np.arange(n)[:, None] < n // 2) == (np.arange(n)[None, :] < n // 2), 1.6, 0.4)
    x = np.random.default_rng(5).standard_normal(n)
    T = DiagonalTensorNetwork([X, ONE, X], [(0, 1), (1, 2)])
    expected = float(x ** 2 @ S.sum(axis=1)) / n ** 2
    vals = [tn_eval(T, sample_symmetric(SymEnsembleSpec("GeneralizedWigner", variance_profile=S), n, s), x)
            for s in range(12)]
    se = np.std(vals, ddof=1) / math.sqrt(len(vals))
    assert abs(np.mean(vals) - expected) <= 4 * se + 2.0 / n


def test_brute_force_cap():
    T = DiagonalTensorNetwork.uniform([(0, 1), (1, 2)], 3)
    with pytest.raises(MemoryError):
        tn_eval_brute(T, np.eye(30), np.ones(30), cap=1000)


@pytest.mark.parametrize("edges,nv,fragment", [
    ([(0, 1), (1, 2), (2, 0)], 3, "not a tree"),
    ([(0, 1)], 3, "not a tree"),
    ([(0, 0)], 2, "self-loop"),
    ([(0, 5)], 2, "missing vertex"),
])
def test_validation_messages(edges, nv, fragment):
    rep = tn_validate(DiagonalTensorNetwork.uniform(edges, nv))
    assert not rep.ok and any(fragment in m for m in rep.messages)
    with pytest.raises(TreeError):
        tn_eval(DiagonalTensorNetwork.uniform(edges, nv), np.eye(3), np.ones(3))


def test_alternating_validation():
    bad = AlternatingTensorNetwork(["U", "U"], [ONE, ONE], [(0, 1)])
    rep = tn_validate(bad)
    assert not rep.ok and "joins two U-vertices" in rep.messages[0]
    arity = DiagonalTensorNetwork([MultiPoly.constant(1.0, 2)], [], k=1)
    assert not tn_validate(arity).ok


def test_round_trip_dict():
    T = DiagonalTensorNetwork([X, X2], [(0, 1)])
    A = AlternatingTensorNetwork(["U", "V"], [X, X2], [(0, 1)])
    assert network_from_dict(T.to_dict()).to_dict() == T.to_dict()
    assert network_from_dict(A.to_dict()).to_dict() == A.to_dict()


@pytest.mark.parametrize("nv,count", [(1, 1), (2, 1), (3, 1), (4, 2), (5, 3), (6, 6), (7, 11)])
def test_tree_counts(nv, count):
    assert len(nonisomorphic_trees(nv)) == count


def test_trees_up_to():
    assert len(trees_up_to(3)) == 1 + 1 + 1 + 2


def test_prufer_known_tree():
    assert sorted(tuple(sorted(e)) for e in prufer_to_edges([3, 3, 3])) == [(0, 3), (1, 3), (2, 3), (3, 4)]


def test_rect_operator_input(rng):
    op = sample_rectangular(RectEnsembleSpec(), 20, 30, 1)
    T = AlternatingTensorNetwork(["V", "U", "V"], [X, ONE, X], [(0, 1), (1, 2)])
    x, y = rng.standard_normal(20), rng.standard_normal(30)
    assert tn_eval_alt(T, op, x, y) == pytest.approx(tn_eval_brute(T, op.A, x, y), rel=1e-10)
