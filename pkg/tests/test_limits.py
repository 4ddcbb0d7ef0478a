import math

import numpy as np
import pytest

from amplab.combinat import (CapExceeded, IndependentMoments, PairFrame, RandomIntegerMoments, SpectralMoments,
                             TableMoments, limval_invariant_sym, limval_wigner_rect, limval_wigner_sym,
                             partition_metric)
from amplab.combinat.moments import MissingMomentError
from amplab.ensembles import RectEnsembleSpec, SymEnsembleSpec, sample_rectangular, sample_symmetric
from amplab.polynomial import MultiPoly
from amplab.spectral import SpectralSpec
from amplab.tensornet import (AlternatingTensorNetwork, DiagonalTensorNetwork, nonisomorphic_trees, tn_eval,
                              tn_eval_alt, trees_up_to)

ONE = MultiPoly.constant(1.0, 1)
X = MultiPoly.variable(0, 1)
NORMAL = IndependentMoments(["normal"])
SEMI = SpectralMoments(SpectralSpec.semicircle())


def _labels(rng, nv):
    # small integer-coefficient polynomials in one variable
    out = []
    for _ in range(nv):
        terms = [((int(rng.integers(0, 4)),), float(rng.integers(-2, 3))) for _ in range(2)]
        p = MultiPoly(1, terms)
        out.append(p if not p.is_zero() else ONE)
    return out


def _mc(values):
    v = np.asarray(values)
    return v.mean(), v.std(ddof=1) / math.sqrt(v.size)


@pytest.mark.parametrize("edges,nv", [([(0, 1)], 2), ([(0, 1), (1, 2), (2, 3)], 4), ([(0, 1), (0, 2), (0, 3)], 4)])
def test_odd_edge_count_is_zero(edges, nv):
    T = DiagonalTensorNetwork([X + ONE] * nv, edges)
    res = limval_wigner_sym(T, NORMAL)
    assert res.value == 0 and "odd-edge parity" in res.note


def test_path_all_ones_is_one_and_matches_goe():
    T = DiagonalTensorNetwork.uniform([(0, 1), (1, 2)], 3)
    assert limval_wigner_sym(T, NORMAL).value == 1
    n = 2000
    vals = [tn_eval(T, sample_symmetric(SymEnsembleSpec("GOE"), n, s), np.zeros(n)) for s in range(20)]
    mean, se = _mc(vals)
    assert abs(mean - 1.0) <= 3 * se


def test_centered_labels_give_zero():
    for edges in trees_up_to(4):
        nv = len(edges) + 1
        assert limval_wigner_sym(DiagonalTensorNetwork([X] * nv, edges), NORMAL).value == 0


def test_path_of_four_by_hand():
    # the 4-edge path with unit labels is (1/n) 1'W^4 1, whose limit is the
    # fourth semicircle moment
    T = DiagonalTensorNetwork.uniform([(0, 1), (1, 2), (2, 3), (3, 4)], 5)
    assert limval_wigner_sym(T, NORMAL).value == 2


def test_star_matches_goe_mc():
    # star with 2 leaves labelled x^2 and centre x^2
    X2 = MultiPoly.monomial([2])
    T = DiagonalTensorNetwork([X2, X2, X2], [(0, 1), (0, 2)])
    lim = float(limval_wigner_sym(T, NORMAL))
    n = 2000
    vals = []
    for s in range(20):
        x = np.random.default_rng(100 + s).standard_normal(n)
        vals.append(tn_eval(T, sample_symmetric(SymEnsembleSpec("GOE"), n, s), x))
    mean, se = _mc(vals)
    assert abs(mean - lim) <= 3 * se


def test_rect_odd_is_zero():
    T = AlternatingTensorNetwork(["U", "V"], [ONE, ONE], [(0, 1)])
    res = limval_wigner_rect(T, 0.5, NORMAL, NORMAL)
    assert res.value == 0 and "odd-edge parity" in res.note


def test_rect_path_is_gamma_and_matches_white_noise():
    T = AlternatingTensorNetwork(["U", "V", "U"], [ONE, ONE, ONE], [(0, 1), (1, 2)])
    assert limval_wigner_rect(T, 0.5, NORMAL, NORMAL).value == pytest.approx(0.5)
    m, n = 1000, 2000
    vals = [tn_eval_alt(T, sample_rectangular(RectEnsembleSpec(), m, n, s), np.zeros(m), np.zeros(n))
            for s in range(20)]
    mean, se = _mc(vals)
    assert abs(mean - 0.5) <= 3 * se


def test_rect_centered_u_labels_give_zero():
    T = AlternatingTensorNetwork(["U", "V", "U", "V", "U"], [X, ONE, X, MultiPoly.monomial([2]), X],
                                 [(0, 1), (1, 2), (2, 3), (3, 4)])
    assert limval_wigner_rect(T, 0.7, NORMAL, NORMAL).value == 0


def test_rect_gamma_must_be_positive():
    T = AlternatingTensorNetwork(["U", "V", "U"], [ONE, ONE, ONE], [(0, 1), (1, 2)])
    with pytest.raises(ValueError):
        limval_wigner_rect(T, 0.0, NORMAL, NORMAL)


def test_missing_moment():
    T = DiagonalTensorNetwork([MultiPoly.monomial([2])] * 3, [(0, 1), (1, 2)])
    with pytest.raises(MissingMomentError):
        limval_wigner_sym(T, TableMoments(1, {(0,): 1.0}))


# ---------------------------------------------------------------- invariant


def test_pair_frame_distance():
    for edges in trees_up_to(5):
        if not edges:
            continue
        fr = PairFrame.from_tree(DiagonalTensorNetwork.uniform(edges, len(edges) + 1))
        assert partition_metric(fr.pi_V, fr.pi_E) == 2 * fr.w - 1
        assert fr.pi_V.join(fr.pi_E).blocks == (tuple(range(2 * fr.w)),)


def test_invariant_single_edge_matches_haar_mc():
    law = SpectralSpec.uniform(-1.0, 3.0)  # E[D] = 1
    T = DiagonalTensorNetwork([X, X], [(0, 1)])
    lim = float(limval_invariant_sym(T, NORMAL, SpectralMoments(law)))
    assert lim == pytest.approx(1.0)
    n = 1000
    vals = []
    for s in range(10):
        x = np.random.default_rng(500 + s).standard_normal(n)
        op = sample_symmetric(SymEnsembleSpec("SymInvariant", eigenvalue_law=law, basis="haar"), n, s)
        vals.append(tn_eval(T, op, x))
    mean, se = _mc(vals)
    assert abs(mean - lim) <= 3 * se


def test_invariant_path_semicircle_is_one():
    T = DiagonalTensorNetwork.uniform([(0, 1), (1, 2)], 3)
    assert float(limval_invariant_sym(T, NORMAL, SEMI)) == pytest.approx(1.0)


def test_invariant_centered_labels_zero():
    law = SpectralMoments(SpectralSpec.symmetric_two_point(1.0))
    for edges in trees_up_to(3):
        if edges:
            T = DiagonalTensorNetwork([X] * (len(edges) + 1), edges)
            assert float(limval_invariant_sym(T, NORMAL, law)) == pytest.approx(0.0, abs=1e-12)


def test_invariant_routes_agree_with_arbitrary_moments():
    rng = np.random.default_rng(3)
    for i, edges in enumerate(trees_up_to(3)):
        if not edges:
            continue
        T = DiagonalTensorNetwork(_labels(rng, len(edges) + 1), edges)
        momX, momD = RandomIntegerMoments(1, 10 + i), RandomIntegerMoments(1, 50 + i)
        a = float(limval_invariant_sym(T, momX, momD, route="chains"))
        b = float(limval_invariant_sym(T, momX, momD, route="moebius"))
        assert a == pytest.approx(b, rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("w", [1, 2, 3, 4])
def test_invariant_with_semicircle_equals_wigner(w):
    rng = np.random.default_rng(w)
    for edges in nonisomorphic_trees(w + 1):
        T = DiagonalTensorNetwork(_labels(rng, w + 1), edges)
        assert float(limval_invariant_sym(T, NORMAL, SEMI)) == pytest.approx(
            float(limval_wigner_sym(T, NORMAL)), rel=1e-10, abs=1e-10)


def test_invariant_single_vertex_and_cap():
    assert float(limval_invariant_sym(DiagonalTensorNetwork([MultiPoly.monomial([2])], []), NORMAL, SEMI)) == 1.0
    T = DiagonalTensorNetwork.uniform([(i, i + 1) for i in range(6)], 7)
    with pytest.raises(CapExceeded):
        limval_invariant_sym(T, NORMAL, SEMI)
    with pytest.raises(ValueError):
        limval_invariant_sym(DiagonalTensorNetwork.uniform([(0, 1)], 2), NORMAL, SEMI, route="nope")
