import math

import numpy as np
import pytest

from maem.errors import ConfigError
from maem.grw import GrwParams, block_generator, classify_boundary, grw_step, simulate_ensemble


def test_params_validated():
    with pytest.raises(ConfigError):
        GrwParams(sigma=-0.1)
    with pytest.raises(ConfigError):
        GrwParams(n_walkers=0)


@pytest.mark.parametrize(
    "mu,sigma,expected", [(0.02, 0.2, "marginal"), (0.03, 0.2, "grows"), (0.01, 0.2, "decays")]
)
def test_classify_boundary_examples(mu, sigma, expected):
    assert classify_boundary(GrwParams(mu, sigma)) == expected


def test_noise_free_step_is_exact_growth():
    w = np.array([1.0, 2.5, 7.0])
    out = grw_step(w, GrwParams(0.05, 0.0, 3), block_generator(0, 0))
    assert np.array_equal(out, w * math.exp(0.05))
    assert np.array_equal(grw_step(w, GrwParams(0.0, 0.0, 3), block_generator(0, 0)), w)


def test_step_keeps_walkers_positive():
    rng = block_generator(1, 0)
    w = np.ones(1000)
    for _ in range(200):
        w = grw_step(w, GrwParams(-0.5, 1.5, 1000), rng)
    assert np.all(w > 0)
    with pytest.raises(ValueError):
        grw_step(np.array([1.0, 0.0]), GrwParams(), rng)


def test_median_slope_negative_below_boundary():
    ens = simulate_ensemble(GrwParams(0.01, 0.2, 10_000, seed=3), 1000)
    assert ens.median_slope() < 0
    assert ens.median_slope() == pytest.approx(-0.01, abs=0.002)


def test_ensemble_mean_grows_as_exp_mu_t():
    p = GrwParams(0.01, 0.2, 100_000, seed=9)
    ens = simulate_ensemble(p, 100)
    expected = math.exp(0.01 * 100)
    assert abs(ens.mean_ratio[-1] - expected) < 3 * ens.mean_sem[-1]


@pytest.mark.parametrize("mu,sigma", [(0.01, 0.2), (0.03, 0.2), (0.02, 0.1), (0.0, 0.1), (0.015, 0.1)])
def test_median_sign_agrees_with_classification(mu, sigma):
    p = GrwParams(mu, sigma, 10_000, seed=1)
    assert abs(p.delta) >= 0.005
    ens = simulate_ensemble(p, 1000)
    assert ("grows" if ens.median_slope() > 0 else "decays") == classify_boundary(p)


def test_results_independent_of_shard_count():
    p = GrwParams(0.01, 0.3, 10_000, seed=4)
    a = simulate_ensemble(p, 50, threads=1)
    b = simulate_ensemble(p, 50, threads=3)
    assert np.array_equal(a.final_log, b.final_log)
    assert np.array_equal(a.median_log, b.median_log)
