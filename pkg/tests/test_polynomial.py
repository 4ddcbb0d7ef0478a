import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from amplab.polynomial import MultiPoly, monomials_up_to

coeffs = st.floats(-3, 3, allow_nan=False)
terms2 = st.lists(st.tuples(st.tuples(st.integers(0, 3), st.integers(0, 3)), coeffs), max_size=6)


def test_merging_and_zero_drop():
    p = MultiPoly(2, [((1, 0), 2.0), ((1, 0), -2.0), ((0, 2), 1.0)])
    assert p.terms == (((0, 2), 1.0),)
    assert p.degree == 2


def test_evaluation_by_hand():
    p = MultiPoly(2, [((2, 1), 3.0), ((0, 0), -1.0)])
    X = np.array([[1.0, 2.0], [2.0, -1.0]])
    assert np.allclose(p(X), [3 * 1 * 2 - 1, 3 * 4 * -1 - 1])


@given(terms2, terms2)
def test_algebra_matches_pointwise(t1, t2):
    p, q = MultiPoly(2, t1), MultiPoly(2, t2)
    X = np.array([[0.3, -1.2], [1.5, 0.7], [-0.4, 2.0]])
    assert np.allclose((p + q)(X), p(X) + q(X))
    assert np.allclose((p * q)(X), p(X) * q(X), atol=1e-9)
    assert np.allclose((p - q)(X), p(X) - q(X))


@given(terms2, st.integers(1, 4))
def test_split_sums_back(t, g):
    p = MultiPoly(2, t)
    parts = p.split(g)
    total = MultiPoly(2)
    for part in parts:
        total = total + part
    assert total == p


def test_expectation_with_gaussian_moments():
    # E[X^2 Y^2 + 3X] for independent standard normals is 1
    p = MultiPoly(2, [((2, 2), 1.0), ((1, 0), 3.0)])
    gm = {0: 1, 1: 0, 2: 1, 3: 0, 4: 3}
    assert p.expectation(lambda e: gm[e[0]] * gm[e[1]]) == 1.0


def test_round_trip():
    p = MultiPoly(3, [((1, 0, 2), 0.5), ((0, 0, 0), 2.0)])
    assert MultiPoly.from_list(3, p.to_list()) == p


def test_bad_inputs():
    with pytest.raises(ValueError):
        MultiPoly(2, [((1,), 1.0)])
    with pytest.raises(ValueError):
        MultiPoly(1, [((-1,), 1.0)])
    with pytest.raises(ValueError):
        MultiPoly.variable(0, 2) + MultiPoly.variable(0, 1)
    with pytest.raises(ValueError):
        MultiPoly.variable(0, 2)(np.ones((3, 3)))


@pytest.mark.parametrize("k,d,count", [(1, 3, 3), (2, 2, 5), (3, 3, 19), (4, 3, 34)])
def test_monomial_count(k, d, count):
    mons = monomials_up_to(k, d)
    assert len(mons) == count == len(set(mons))
    assert [sum(e) for e in mons] == sorted(sum(e) for e in mons)
