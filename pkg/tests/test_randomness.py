import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from lifshitz.randomness import (
    CouplingDistribution,
    Realization,
    averages,
    derive_seed,
    large_deviation_empirical,
    large_deviation_hoeffding,
    mean_cutoff,
    sample_batch,
    sample_realization,
)


def binomial_cdf(k, n, p):
    return sum(math.comb(n, i) * p**i * (1 - p) ** (n - i) for i in range(k + 1))


def test_point_mass_limit():
    r = sample_realization(CouplingDistribution.bernoulli(1.0), 4, seed=99)
    assert r.lambdas.tolist() == [1.0, 1.0, 1.0, 1.0]


def test_uniform_law_of_large_numbers(uniform01):
    r = sample_realization(uniform01, 100_000, seed=1)
    assert abs(r.lambdas.mean() - 0.5) < 0.01
    assert r.lambdas.min() >= 0.0 and r.lambdas.max() <= 1.0


def test_discrete_fair_coin_fraction():
    dist = CouplingDistribution.discrete((0.0, 1.0), (0.5, 0.5))
    r = sample_realization(dist, 100_000, seed=5)
    assert abs(r.lambdas.mean() - 0.5) < 0.01


def test_reproducible_and_seed_sensitive(uniform01):
    a = sample_realization(uniform01, 50, seed=123)
    b = sample_realization(uniform01, 50, seed=123)
    c = sample_realization(uniform01, 50, seed=124)
    assert np.array_equal(a.lambdas, b.lambdas)
    assert not np.array_equal(a.lambdas, c.lambdas)


def test_batch_rows_independent_of_chunking(coin):
    whole = sample_batch(coin, 7, seed=11, start=0, stop=20)
    parts = np.vstack([sample_batch(coin, 7, 11, 0, 5), sample_batch(coin, 7, 11, 5, 20)])
    assert np.array_equal(whole, parts)
    single = sample_realization(coin, 7, derive_seed(11, 13))
    assert np.array_equal(single.lambdas, whole[13])


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(kind="bernoulli", p=1.5),
        dict(kind="bernoulli", p=-0.1),
        dict(kind="uniform", a=1.0, b=0.0),
        dict(kind="discrete", values=(0.0, 1.0), weights=(0.5, -0.5)),
        dict(kind="discrete", values=(0.0,), weights=(1.0, 2.0)),
        dict(kind="gamma"),
    ],
)
def test_invalid_distributions(kwargs):
    with pytest.raises(ValueError):
        CouplingDistribution(**kwargs)


def test_support_bounds_and_triviality():
    assert CouplingDistribution.bernoulli(0.3).lam_minus == 0.0
    assert CouplingDistribution.bernoulli(0.3).lam_plus == 1.0
    assert CouplingDistribution.point_mass(1.0).is_trivial
    assert not CouplingDistribution.uniform(0, 1).is_trivial
    pm = CouplingDistribution.point_mass(0.0, lower=0.0, upper=1.0)
    assert (pm.lam_minus, pm.lam_plus) == (0.0, 1.0)
    with pytest.raises(ValueError):
        CouplingDistribution.point_mass(0.5, lower=0.6)
    with pytest.raises(ValueError):
        CouplingDistribution.uniform(0, 0.8).require_unit_support()


@pytest.mark.parametrize(
    "lambdas, s, s_tilde",
    [
        ((0.2, 0.8, 1.0, 0.4), 0.6, 0.4),
        ((0.0, 0.0), 0.0, 0.0),
        ((1.0, 1.0, 1.0, 1.0), 1.0, 0.5),
    ],
)
def test_averages(lambdas, s, s_tilde):
    st_ = averages(Realization.from_lambdas(lambdas))
    assert st_.s_l == pytest.approx(s, abs=1e-15)
    assert st_.s_l_tilde == pytest.approx(s_tilde, abs=1e-15)


@given(st.lists(st.floats(0.0, 1.0), min_size=1, max_size=40))
def test_cutoff_average_bounds(lambdas):
    st_ = averages(Realization.from_lambdas(lambdas))
    assert 0.0 <= st_.s_l_tilde <= min(st_.s_l, 0.5) + 1e-15
    assert st_.s_l_tilde <= 0.5


@pytest.mark.parametrize(
    "dist, expected",
    [
        (CouplingDistribution.uniform(0, 1), 0.375),
        (CouplingDistribution.bernoulli(0.5), 0.25),
        (CouplingDistribution.point_mass(0.3), 0.3),
        (CouplingDistribution.uniform(0, 0.4), 0.2),
        (CouplingDistribution.uniform(0.6, 0.9), 0.5),
    ],
)
def test_mean_cutoff(dist, expected):
    assert mean_cutoff(dist) == pytest.approx(expected, abs=1e-15)


def test_mean_cutoff_matches_quadrature():
    from scipy.integrate import quad

    dist = CouplingDistribution.uniform(0.2, 0.9)
    numeric = quad(lambda x: min(x, 0.5), 0.2, 0.9, points=[0.5])[0] / 0.7
    assert mean_cutoff(dist) == pytest.approx(numeric, rel=1e-12)


def test_large_deviation_exact_binomial(coin):
    est = large_deviation_empirical(coin, 4, 1 / 8, R=20_000, seed=3)
    exact = binomial_cdf(1, 4, 0.5)
    assert exact == 5 / 16
    assert est.ci_low <= exact <= est.ci_high


def test_large_deviation_trivial_cases(uniform01):
    assert large_deviation_empirical(CouplingDistribution.point_mass(1.0), 5, 0.25, 200, 0).estimate == 0.0
    assert large_deviation_empirical(uniform01, 5, 0.5, 200, 0).estimate == 1.0
    with pytest.raises(ValueError):
        large_deviation_empirical(uniform01, 5, 0.1, 0, 0)


def test_hoeffding_values():
    assert large_deviation_hoeffding(0.375, 9, 0.1875) == pytest.approx(math.exp(-2.53125), rel=1e-15)
    assert large_deviation_hoeffding(0.375, 9, 0.1875) == pytest.approx(0.0795, abs=1e-4)
    assert large_deviation_hoeffding(0.25, 0, 0.125) == 1.0
    with pytest.raises(ValueError):
        large_deviation_hoeffding(0.3, 4, 0.3)


@settings(max_examples=50)
@given(st.floats(0.01, 0.5), st.floats(0.05, 0.95), st.integers(1, 200))
def test_hoeffding_log_linear_in_L(mu, frac, L):
    t = mu * frac
    assume(32 * L * (mu - t) ** 2 < 600)  # stay clear of exp underflow
    logs = [math.log(large_deviation_hoeffding(mu, k, t)) for k in (L, 2 * L, 4 * L)]
    assert logs[2] - logs[1] == pytest.approx(2 * (logs[1] - logs[0]), rel=1e-12, abs=1e-12)


def test_empirical_dominated_and_decreasing(coin):
    mu = mean_cutoff(coin)
    prev = None
    for L in (4, 8, 16):
        est = large_deviation_empirical(coin, L, mu / 2, R=10_000, seed=L)
        assert est.estimate <= large_deviation_hoeffding(mu, L, mu / 2) + est.ci_half
        if prev is not None:
            assert est.ci_low <= prev.ci_high
        prev = est
