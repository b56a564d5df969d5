import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import digamma as sp_digamma

from corrfilter.errors import InvalidParameter, SingularMatrix, Undefined
from corrfilter.losses import (
    ALL_LOSSES,
    LossKind,
    Spectrum,
    digamma,
    evaluate,
    evaluate_many,
    expected_kl_pair,
    expected_kl_population,
    frobenius,
    inverse_frobenius,
    inverse_kl,
    kl,
    minimum_variance,
    stein,
    symmetrized_stein,
)

from conftest import random_spd

I2 = np.eye(2)


def test_closed_form_values():
    assert kl(I2, 2 * I2) == pytest.approx(math.log(2) - 0.5, abs=1e-15)
    assert inverse_kl(I2, 2 * I2) == pytest.approx(1 - math.log(2), abs=1e-15)
    assert frobenius(np.diag([1.0, 1.0]), np.diag([1.0, 3.0])) == pytest.approx(2.0)
    assert minimum_variance(I2, 2 * I2) == pytest.approx(0.0, abs=1e-15)
    assert symmetrized_stein(np.eye(1), 2 * np.eye(1)) == pytest.approx(0.5)
    assert inverse_frobenius(I2, 2 * I2) == pytest.approx(0.25)


def test_raw_and_scaled_kl():
    a, b = np.diag([1.0, 2.0, 3.0]), np.eye(3)
    assert kl(a, b) == pytest.approx(2 / 3 * kl(a, b, scaled=False))


def test_stein_reference_matches_inverse_kl(rng):
    a, b = random_spd(rng, 6), random_spd(rng, 6)
    assert inverse_kl(a, b) == pytest.approx(stein(a, b), abs=1e-12)


@given(st.integers(1, 30), st.integers(0, 2**32 - 1))
def test_loss_identities(p, seed):
    rng = np.random.default_rng(seed)
    a, b = random_spd(rng, p), random_spd(rng, p)
    for kind in ALL_LOSSES:
        assert abs(evaluate(kind, a, a)) <= 1e-10
        assert evaluate(kind, a, b) >= -1e-10
    assert symmetrized_stein(a, b) == pytest.approx(symmetrized_stein(b, a), abs=1e-10)


def test_evaluate_many_reuses_spectra(rng):
    a, b = random_spd(rng, 5), random_spd(rng, 5)
    sa, sb = Spectrum(a), Spectrum(b)
    many = evaluate_many(sa, sb)
    for kind in ALL_LOSSES:
        assert many[kind] == pytest.approx(evaluate(kind, a, b), rel=1e-12)


def test_from_decomposition_matches_dense(rng):
    a = random_spd(rng, 6)
    w, v = np.linalg.eigh(a)
    s = Spectrum.from_decomposition(w, v)
    np.testing.assert_allclose(s.matrix, a, atol=1e-12)
    assert s.logdet == pytest.approx(np.linalg.slogdet(a)[1])


def test_singular_argument_reported(rng):
    a = random_spd(rng, 4)
    singular = np.diag([1.0, 1.0, 1.0, 0.0])
    with pytest.raises(SingularMatrix):
        kl(a, singular)
    out = evaluate_many(a, singular)
    assert math.isnan(out[LossKind.KL])
    assert math.isfinite(out[LossKind.FROBENIUS])


def test_loss_names_parse():
    assert LossKind.parse("stein") is LossKind.INVERSE_KL
    assert LossKind.parse("Inverse-KL") is LossKind.INVERSE_KL
    assert LossKind.parse(LossKind.MINIMUM_VARIANCE) is LossKind.MINIMUM_VARIANCE
    with pytest.raises(InvalidParameter):
        LossKind.parse("l2")


def test_expected_pair_values():
    assert expected_kl_pair(100, 200) == pytest.approx(101 / 99)
    assert expected_kl_pair(20, 80) == pytest.approx(0.35593220338983)
    assert expected_kl_pair(1, 3) == 2.0
    with pytest.raises(Undefined):
        expected_kl_pair(10, 11)


def test_expected_population_values():
    assert expected_kl_population(1, 100) == pytest.approx(0.0105, abs=5e-4)
    assert expected_kl_population(1, 100) == pytest.approx(
        math.log(2 / 100) + sp_digamma(50) + 2 / 98, abs=1e-12
    )
    assert expected_kl_population(100, 200) == pytest.approx(0.70989, abs=1e-5)
    values = [expected_kl_population(20, n) for n in (30, 60, 120, 240)]
    assert values == sorted(values, reverse=True)


def test_expected_population_monte_carlo():
    rng = np.random.default_rng(12)
    p, n = 10, 40
    samples = []
    for _ in range(3000):
        x = rng.standard_normal((p, n))
        samples.append(kl(np.eye(p), x @ x.T / n))
    assert np.mean(samples) == pytest.approx(expected_kl_population(p, n), rel=0.02)


def test_digamma_reference_points():
    assert digamma(1.0) == pytest.approx(-0.5772156649015329, abs=1e-12)
    assert digamma(0.5) == pytest.approx(-0.5772156649015329 - 2 * math.log(2), abs=1e-12)
    with pytest.raises(InvalidParameter):
        digamma(0.0)
    with pytest.raises(InvalidParameter):
        digamma(float("inf"))


@given(st.floats(1e-3, 1e4))
def test_digamma_against_scipy_and_recurrence(x):
    assert digamma(x) == pytest.approx(sp_digamma(x), abs=1e-12, rel=1e-13)
    assert digamma(x + 1) - digamma(x) == pytest.approx(1 / x, abs=1e-12, rel=1e-12)
