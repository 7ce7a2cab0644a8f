import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from afbm.exceptions import CapExceededError, DegenerateFitError, InsufficientSamplesError
from afbm.kernels import cov_realline, var_Y_increment
from afbm.moments import (
    FactorialDecayFit,
    HolderMomentFit,
    admissible_permutations,
    factorial_decay_fit,
    holder_moment_fit,
    mc_variance,
    wick_variance_gamma,
    wick_variance_Y,
    y_pairings,
)
from afbm.sampler import YSampler


def test_admissible_permutation_counts():
    assert len(admissible_permutations((1, 2))) == 1
    assert len(admissible_permutations((1, 1))) == 2
    assert len(admissible_permutations((1, 1, 2))) == 2
    assert len(admissible_permutations((1, 2, 1, 2))) == 4
    assert admissible_permutations((1, 2, 1)).permutations == ((0, 1, 2), (2, 1, 0))
    with pytest.raises(CapExceededError):
        admissible_permutations((1,) * 9)


@given(st.lists(st.integers(1, 3), min_size=1, max_size=4))
def test_permutations_preserve_letters(word):
    for sigma in admissible_permutations(word):
        assert all(word[j] == word[k] for j, k in enumerate(sigma))


def test_y_pairing_counts():
    # two copies of "1": one pairing, crossing
    assert len(y_pairings((1,))) == 1
    # "11|11": three matchings, one of which stays inside each copy
    assert len(y_pairings((1, 1), centered=False)) == 3
    assert len(y_pairings((1, 1))) == 2
    assert len(y_pairings((1, 2))) == 1


@pytest.mark.parametrize("alpha,s,t", [(0.3, 0.0, 1.0), (0.6, 0.5, 1.0), (0.75, 0.2, 0.9)])
def test_wick_Y_level_one(alpha, s, t):
    assert wick_variance_Y((1,), s, t, alpha) == pytest.approx(var_Y_increment(s, t, alpha), rel=1e-6)


@pytest.mark.parametrize("alpha", [0.3, 0.6])
def test_wick_Y_repeated_letter(alpha):
    # Y^{11} = (Delta Y)^2 / 2, whose variance is sigma^4 / 2
    sig2 = var_Y_increment(0.0, 1.0, alpha)
    assert wick_variance_Y((1, 1), 0.0, 1.0, alpha) == pytest.approx(sig2**2 / 2, rel=1e-6)


def _gamma_increment_var(s, t, alpha):
    return (cov_realline(t, t, alpha) + cov_realline(s, s, alpha) - 2 * cov_realline(s, t, alpha)).real


@pytest.mark.parametrize("alpha,s,t", [(0.3, 0.0, 1.0), (0.6, 0.5, 1.0)])
def test_wick_gamma_low_levels(alpha, s, t):
    v = _gamma_increment_var(s, t, alpha)
    assert wick_variance_gamma((1,), s, t, alpha) == pytest.approx(v, rel=1e-5)
    assert wick_variance_gamma((1, 1), s, t, alpha) == pytest.approx(v**2 / 2, rel=1e-5)


def test_wick_frozen_cross_terms():
    # frozen from Richardson-extrapolated exact discrete expectations
    assert wick_variance_Y((1, 2), 0.0, 1.0, 0.3) == pytest.approx(0.0035611118961696294, rel=1e-5)
    assert wick_variance_gamma((1, 2), 0.0, 1.0, 0.3) == pytest.approx(0.0944588312881875, rel=1e-5)
    assert wick_variance_Y((1, 2), 0.5, 1.0, 0.6) == pytest.approx(7.953994738439145e-05, rel=1e-5)
    assert wick_variance_gamma((1, 2), 0.5, 1.0, 0.6) == pytest.approx(0.01500118343262318, rel=1e-5)
    # Brownian case: Var Levy area part = v^2 / 3 with v = 1/2
    assert wick_variance_gamma((1, 2), 0.0, 1.0, 0.5) == pytest.approx(1 / 12, rel=1e-5)


def test_wick_symmetry_and_domination():
    a = 0.4
    y12 = wick_variance_Y((1, 2), 0.0, 1.0, a)
    assert y12 == pytest.approx(wick_variance_Y((2, 1), 0.0, 1.0, a), rel=1e-6)
    # centering cannot increase the second moment
    assert wick_variance_Y((1, 1), 0.0, 1.0, a) <= wick_variance_Y((1, 1), 0.0, 1.0, a, centered=False)
    assert y12 > 0


def test_mc_variance_basics():
    assert mc_variance(np.ones(200)) == (0.0, 0.0)
    with pytest.raises(InsufficientSamplesError):
        mc_variance(np.ones(99))
    x = np.random.default_rng(0).standard_normal(1000)
    est, se = mc_variance(x, centered=False)
    assert est == pytest.approx(np.mean(x**2))
    assert se == pytest.approx(np.std(x**2, ddof=1) / math.sqrt(1000))


def test_mc_variance_jackknife_matches_gaussian_rate():
    # for Gaussian data SE(s^2) ~ sigma^2 sqrt(2/n)
    rng = np.random.default_rng(1)
    ratios = [mc_variance(rng.standard_normal(2000) * 1.5)[1] / (2.25 * math.sqrt(2 / 2000)) for _ in range(20)]
    assert 0.8 < np.mean(ratios) < 1.2


def test_mc_variance_level_one_against_closed_form():
    alpha = 0.3
    paths = YSampler(alpha).fit(np.array([0.0, 1.0])).sample(20000, seed=3)
    inc = paths.values[:, 0, 1] - paths.values[:, 0, 0]
    est, se = mc_variance(inc)
    assert abs(est - var_Y_increment(0.0, 1.0, alpha)) < 4 * se


def test_factorial_fit_recovers_rate():
    k = 2.5
    n = np.arange(1, 7)
    v = np.array([k**j / math.factorial(j) for j in n])
    res = factorial_decay_fit(v, 1.0, 0.5)
    assert res.slope == pytest.approx(math.log(k))
    assert res.r_squared == pytest.approx(1.0)
    assert res.constant == pytest.approx(k)  # C' = exp(slope / (2 alpha)) with alpha = 1/2
    assert res.passed
    est = FactorialDecayFit(alpha=0.5).fit(v)
    assert np.allclose(est.predict(n), v)


def test_factorial_fit_on_exact_Y_second_moments():
    # E|Y^{1...1}|^2 = E(Delta Y)^{2n} / n!^2 = (2n-1)!! sigma^{2n} / n!^2
    sig2 = var_Y_increment(0.0, 1.0, 0.3)
    n = np.arange(1, 7)
    v = np.array([math.prod(range(1, 2 * j, 2)) * sig2**j / math.factorial(j) ** 2 for j in n])
    assert factorial_decay_fit(v, 1.0, 0.3).passed


def test_fit_degenerate_inputs():
    with pytest.raises(DegenerateFitError):
        factorial_decay_fit([1.0, 0.0, 0.5], 1.0, 0.3)
    with pytest.raises(DegenerateFitError):
        factorial_decay_fit([1.0, 0.5, 0.1], 1.0, 0.3, stderrs=[0.1, 0.1, 0.2])
    with pytest.raises(DegenerateFitError):
        holder_moment_fit([0.1, 0.2, 0.3, 0.4], [1, 2, 3, 4], 0.3)


def test_holder_fit():
    seps = 2.0 ** -np.arange(1, 7)
    res = holder_moment_fit(seps, 3.0 * seps**0.6, 0.3)
    assert res.slope == pytest.approx(0.6)
    assert res.constant == pytest.approx(3.0)
    assert res.passed and res.details["in_window"]
    steep = holder_moment_fit(seps, seps**1.9, 0.3)
    assert steep.passed and not steep.details["in_window"]
    assert not holder_moment_fit(seps, seps**0.3, 0.3).passed
    zero = HolderMomentFit(alpha=0.3).fit(seps, np.zeros_like(seps)).result_
    assert zero.verdict == "DEGENERATE"


@settings(max_examples=20, deadline=None)
@given(st.floats(0.1, 0.9), st.floats(0.0, 0.8), st.floats(0.05, 1.0))
def test_wick_level_one_positive(alpha, s, length):
    assert wick_variance_Y((1,), s, s + length, alpha) > 0
