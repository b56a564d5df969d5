import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.cluster.hierarchy import cophenet, linkage
from scipy.spatial.distance import squareform

from corrfilter.errors import DegenerateFirstStep, InvalidCorrelation, InvalidMatrix
from corrfilter.hce import (
    Dendrogram,
    alca_filter,
    average_linkage,
    cophenetic,
    dissimilarity,
    to_unit_diagonal,
    two_step,
)
from corrfilter.rie import lp_shrink, naive

from conftest import random_correlation

NESTED4 = np.array(
    [
        [1.0, 0.7, 0.4, 0.4],
        [0.7, 1.0, 0.4, 0.4],
        [0.4, 0.4, 1.0, 0.6],
        [0.4, 0.4, 0.6, 1.0],
    ]
)


def three_leaf():
    return np.array([[0.0, 0.2, 0.5], [0.2, 0.0, 0.4], [0.5, 0.4, 0.0]])


def test_two_leaves():
    dend = average_linkage(np.array([[0.0, 0.3], [0.3, 0.0]]))
    assert len(dend.merges) == 1
    assert dend.merges[0].height == 0.3
    assert cophenetic(dend)[0, 1] == 0.3


def test_three_leaf_hand_example():
    dend = average_linkage(three_leaf())
    assert [(m.a, m.b) for m in dend.merges] == [(0, 1), (2, 3)]
    assert dend.heights() == pytest.approx([0.2, 0.45])
    rho = cophenetic(dend)
    assert rho[0, 1] == pytest.approx(0.2)
    assert rho[0, 2] == rho[1, 2] == pytest.approx(0.45)


def test_four_leaf_hand_example():
    dend = average_linkage(dissimilarity(NESTED4))
    assert dend.heights() == pytest.approx([0.3, 0.4, 0.6])


def test_alca_hand_examples():
    e = np.array([[1.0, 0.8, 0.5], [0.8, 1.0, 0.6], [0.5, 0.6, 1.0]])
    xi = alca_filter(e)
    assert xi[0, 1] == pytest.approx(0.8)
    assert xi[0, 2] == xi[1, 2] == pytest.approx(0.55)
    np.testing.assert_allclose(alca_filter(NESTED4), NESTED4, atol=1e-15)
    np.testing.assert_array_equal(alca_filter(np.eye(5)), np.eye(5))


def test_perfect_correlation_merges_at_zero():
    e = np.array([[1.0, 1.0 - 2e-16], [1.0 - 2e-16, 1.0]])
    np.testing.assert_array_equal(alca_filter(e), np.ones((2, 2)))


@given(st.integers(2, 32), st.integers(0, 2**32 - 1))
def test_matches_scipy_average_linkage(p, seed):
    d = dissimilarity(random_correlation(np.random.default_rng(seed), p))
    ours = average_linkage(d)
    ref = linkage(squareform(d, checks=False), method="average")
    np.testing.assert_allclose(ours.heights(), ref[:, 2], atol=1e-12)
    np.testing.assert_allclose(squareform(cophenetic(ours), checks=False), cophenet(ref), atol=1e-12)


def test_tie_break_is_lexicographic():
    d = np.ones((4, 4)) - np.eye(4)
    dend = average_linkage(d)
    assert [(m.a, m.b) for m in dend.merges] == [(0, 1), (2, 3), (4, 5)]


def test_dendrogram_serialization():
    dend = average_linkage(dissimilarity(NESTED4))
    again = Dendrogram.from_json(dend.to_json())
    assert again == dend
    assert dend.to_linkage().shape == (3, 4)


def ultrametric_violations(rho):
    p = rho.shape[0]
    return [
        (i, j, k)
        for i, j, k in itertools.permutations(range(p), 3)
        if rho[i, j] > max(rho[i, k], rho[k, j]) + 1e-12
    ]


def test_ultrametric_dual_inequality_bulk():
    rng = np.random.default_rng(17)
    for _ in range(1000):
        p = int(rng.integers(3, 33))
        xi = alca_filter(random_correlation(rng, p))
        # dual form: xi_ij >= min(xi_ik, xi_kj) for every triple
        lo = np.minimum(xi[:, :, None], xi.T[None, :, :])  # lo[i, k, j] = min(xi_ik, xi_kj)
        bound = lo.max(axis=1)
        assert np.all(xi >= bound - 1e-12)


def test_cophenetic_is_ultrametric():
    rng = np.random.default_rng(4)
    rho = cophenetic(average_linkage(dissimilarity(random_correlation(rng, 9))))
    assert ultrametric_violations(rho) == []


@given(st.integers(2, 20), st.integers(0, 2**32 - 1))
def test_alca_idempotent(p, seed):
    xi = alca_filter(random_correlation(np.random.default_rng(seed), p))
    np.testing.assert_allclose(alca_filter(xi), xi, atol=1e-12)
    np.testing.assert_allclose(two_step(xi, naive), xi, atol=1e-12)


def test_two_step_with_identity_first_step(rng):
    e = random_correlation(rng, 10)
    np.testing.assert_allclose(two_step(e, naive), alca_filter(e), atol=1e-12)
    np.testing.assert_allclose(two_step(e, lambda m: m), alca_filter(e), atol=1e-12)


def test_two_step_rescales_first_step(rng):
    e = random_correlation(rng, 20, n=40)
    out = two_step(e, lambda m: lp_shrink(m, 0.5))
    np.testing.assert_array_equal(np.diag(out), 1.0)
    assert np.all(out <= 1.0)


def test_unit_diagonal_rescale():
    r = np.array([[4.0, 2.0], [2.0, 9.0]])
    np.testing.assert_allclose(to_unit_diagonal(r), [[1.0, 1 / 3], [1 / 3, 1.0]])
    with pytest.raises(DegenerateFirstStep):
        to_unit_diagonal(np.diag([1.0, 0.0]))


def test_alca_input_validation():
    with pytest.raises(InvalidCorrelation):
        alca_filter(np.array([[1.0, 1.5], [1.5, 1.0]]))
    with pytest.raises(InvalidMatrix):
        alca_filter(np.ones((2, 3)))
    with pytest.raises(InvalidMatrix):
        average_linkage(np.array([[0.0, np.nan], [np.nan, 0.0]]))


def test_negative_correlations_allowed():
    e = np.array([[1.0, -0.5, 0.1], [-0.5, 1.0, 0.2], [0.1, 0.2, 1.0]])
    xi = alca_filter(e)
    assert np.all(np.isfinite(xi))
    assert xi.min() < 0
