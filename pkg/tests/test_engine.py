import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from maem import (
    ConfigError,
    DegenerateStateError,
    ModelParams,
    PhiloxStream,
    WealthState,
    advance,
    advance_unit,
    exchange_step,
    growth_shares,
    growth_step,
    init_state,
)
from oracles import draw, replay

KEY = (0x1234ABCD, 0x0BADF00D)


def stream_with(first_draw):
    """Stream positioned at the first counter whose draw satisfies a predicate."""
    for c in range(10_000):
        if first_draw(draw(c, KEY, 2)):
            return PhiloxStream.from_key(*KEY, counter=c)
    raise AssertionError("no such draw")


# --- parameters and initial state ------------------------------------------

@pytest.mark.parametrize(
    "field,kwargs",
    [
        ("gamma", {"gamma": -0.1}),
        ("mu", {"mu": -1e-3}),
        ("alpha", {"alpha": 1.0}),
        ("alpha", {"alpha": -0.1}),
        ("n_agents", {"n_agents": 1}),
        ("seed", {"seed": -1}),
        ("seed", {"seed": 2**64}),
        ("gamma", {"gamma": float("nan")}),
    ],
)
def test_invalid_params_name_the_field(field, kwargs):
    with pytest.raises(ConfigError) as err:
        ModelParams(**kwargs)
    assert err.value.key == field


def test_init_state_equal_distribution():
    s = init_state(ModelParams(n_agents=4))
    assert s.wealth.tolist() == [1.0, 1.0, 1.0, 1.0]
    assert s.log_total == 0.0 and s.time == 0
    s = init_state(ModelParams(n_agents=2500))
    assert s.wealth.sum() == 2500.0
    assert np.all(s.rescaled == 1 / 2500)


def test_from_wealth_keeps_scale_in_log_total():
    s = WealthState.from_wealth([2.0, 6.0])
    assert s.wealth.tolist() == [0.5, 1.5]
    assert s.log_total == pytest.approx(math.log(4.0))
    np.testing.assert_allclose(s.true_wealth(), [2.0, 6.0])


# --- exchange -------------------------------------------------------------

def test_exchange_poorer_wins():
    # agent 0 holds 2, agent 1 holds 5; find a draw where agent 0 wins
    rng = stream_with(lambda d: (d[0] == 0) == (d[2] == 1))
    s = WealthState(np.array([2.0, 5.0]))
    exchange_step(s, ModelParams(alpha=0.1, n_agents=2), rng)
    np.testing.assert_allclose(s.wealth, [2.2, 4.8], rtol=1e-15)


def test_exchange_agent0_wins_equal_wealth():
    rng = stream_with(lambda d: (d[0] == 0) == (d[2] == 1))
    s = WealthState(np.array([1.0, 1.0]))
    exchange_step(s, ModelParams(alpha=0.25, n_agents=2), rng)
    assert s.wealth.tolist() == [1.25, 0.75]


def test_exchange_alpha_zero_is_identity():
    w = np.random.default_rng(1).random(20)
    s = WealthState(w.copy())
    exchange_step(s, ModelParams(alpha=0.0, n_agents=20), PhiloxStream(3), n_steps=1000)
    assert np.array_equal(s.wealth, w)


def test_exchange_conservation_over_a_million_steps():
    s = init_state(ModelParams(n_agents=1000))
    exchange_step(s, ModelParams(alpha=0.3, n_agents=1000), PhiloxStream(11), n_steps=10**6)
    assert abs(s.wealth.sum() - 1000) / 1000 < 1e-9
    assert np.all(s.wealth >= 0)


def test_bankrupt_agent_stays_bankrupt():
    w = np.array([0.0, 1.0, 2.0, 3.0])
    s = WealthState(w)
    p = ModelParams(gamma=0.7, mu=0.05, alpha=0.5, n_agents=4)
    exchange_step(s, p, PhiloxStream(0), n_steps=500)
    assert s.wealth[0] == 0.0
    growth_step(s, p)
    assert s.wealth[0] == 0.0


@settings(max_examples=30, deadline=None)
@given(
    st.lists(st.floats(1e-3, 1e3), min_size=2, max_size=12),
    st.floats(0.0, 0.99),
    st.integers(0, 2**32),
)
def test_exchange_conserves_and_stays_nonnegative(w, alpha, seed):
    s = WealthState(np.array(w))
    total = s.wealth.sum()
    exchange_step(s, ModelParams(alpha=alpha, n_agents=len(w)), PhiloxStream(seed), n_steps=200)
    assert np.all(s.wealth >= 0)
    assert s.wealth.sum() == pytest.approx(total, rel=1e-12)


# --- growth ----------------------------------------------------------------

def test_growth_shares_gamma2_hand_case():
    np.testing.assert_allclose(growth_shares([1.0, 2.0], 2.0, 0.3), [0.18, 0.72], rtol=1e-14)


def test_growth_gamma0_equal_gains():
    gains = growth_shares([1.0, 2.0, 3.0, 4.0], 0.0, 0.1)
    np.testing.assert_allclose(gains, 0.25, rtol=1e-14)
    s = WealthState(np.array([1.0, 2.0, 3.0, 4.0]))
    growth_step(s, ModelParams(gamma=0.0, mu=0.1, n_agents=4))
    expected = np.array([1.25, 2.25, 3.25, 4.25]) / 1.1
    np.testing.assert_allclose(s.wealth / s.wealth.sum(), expected / expected.sum(), rtol=1e-14)
    assert s.wealth.sum() == pytest.approx(4.0, rel=1e-14)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(1e-6, 1e6), min_size=2, max_size=50), st.floats(1e-6, 0.5))
def test_growth_gamma0_shares_identical(w, mu):
    gains = growth_shares(w, 0.0, mu)
    np.testing.assert_allclose(gains, gains[0], rtol=1e-14)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(1e-6, 1e6), min_size=2, max_size=50), st.floats(1e-6, 0.5))
def test_growth_gamma1_is_identity_on_normalized_wealth(w, mu):
    s = WealthState.from_wealth(w)
    before = s.wealth.copy()
    growth_step(s, ModelParams(gamma=1.0, mu=mu, n_agents=len(w)))
    np.testing.assert_allclose(s.wealth, before, rtol=1e-12)


def test_zero_wealth_gets_no_growth_even_at_gamma0():
    gains = growth_shares([0.0, 1.0, 1.0], 0.0, 0.3)
    assert gains[0] == 0.0
    np.testing.assert_allclose(gains[1:], 0.3)


def test_growth_on_all_bankrupt_state_raises():
    s = WealthState(np.zeros(3))
    with pytest.raises(DegenerateStateError):
        growth_step(s, ModelParams(n_agents=3))
    with pytest.raises(DegenerateStateError):
        advance(WealthState(np.zeros(3)), ModelParams(n_agents=3), PhiloxStream(0), 2)


@settings(max_examples=30, deadline=None)
@given(
    st.lists(st.floats(1e-3, 1e3), min_size=2, max_size=20),
    st.floats(0.0, 2.0),
    st.floats(1e-3, 1e3),
)
def test_growth_shares_homogeneous(w, gamma, c):
    w = np.array(w)
    np.testing.assert_allclose(growth_shares(c * w, gamma, 0.01), c * growth_shares(w, gamma, 0.01), rtol=1e-12)


# --- whole units ------------------------------------------------------------

def test_frozen_dynamics_only_advance_the_clock():
    p = ModelParams(gamma=0.9, mu=0.0, alpha=0.0, n_agents=10)
    s = init_state(p)
    advance_unit(s, p, p.stream())
    assert s.time == 1 and s.log_total == 0.0
    assert s.wealth.tolist() == [1.0] * 10


def test_log_total_compounds_discretely():
    p = ModelParams(mu=1e-3, n_agents=50)
    s = init_state(p)
    advance(s, p, p.stream(), 1000)
    assert s.log_total == 1000 * math.log1p(1e-3)
    assert s.time == 1000
    assert s.wealth.sum() == pytest.approx(50, rel=1e-9)


def test_unit_matches_scalar_replay_n3():
    p = ModelParams(gamma=0.9, mu=0.01, alpha=0.5, n_agents=3, seed=42)
    rng = p.stream(7)
    s = init_state(p)
    for _ in range(5):
        advance_unit(s, p, rng)
    expected, counter = replay([1.0, 1.0, 1.0], 0.9, 0.01, 0.5, (rng.k0, rng.k1), 5)
    np.testing.assert_allclose(s.wealth, expected, rtol=1e-12)
    assert rng.counter == counter == 15
    assert s.time == 5


@pytest.mark.parametrize("gamma", [0.0, 0.5, 1.0, 1.3])
def test_advance_equals_repeated_units(gamma):
    p = ModelParams(gamma=gamma, mu=0.02, alpha=0.2, n_agents=7, seed=3)
    a, b = init_state(p), init_state(p)
    ra, rb = p.stream(), p.stream()
    advance(a, p, ra, 40)
    for _ in range(40):
        advance_unit(b, p, rb)
    assert np.array_equal(a.wealth, b.wealth)
    assert ra.counter == rb.counter


@settings(max_examples=20, deadline=None)
@given(st.floats(0.01, 100.0), st.floats(0.0, 1.5), st.integers(0, 1000))
def test_scale_invariance(c, gamma, seed):
    w = np.random.default_rng(seed).random(6) + 0.1
    p = ModelParams(gamma=gamma, mu=0.05, alpha=0.3, n_agents=6)
    a, b = WealthState(w.copy()), WealthState(c * w)
    exchange_step(a, p, PhiloxStream(seed), n_steps=30)
    exchange_step(b, p, PhiloxStream(seed), n_steps=30)
    np.testing.assert_allclose(b.wealth, c * a.wealth, rtol=1e-12)
    # growth maps both onto the same normalized vector
    advance(a, p, PhiloxStream(seed, 1), 3)
    advance(b, p, PhiloxStream(seed, 1), 3)
    np.testing.assert_allclose(b.wealth, a.wealth, rtol=1e-11)


def test_state_size_must_match_params():
    with pytest.raises(ConfigError):
        advance(init_state(ModelParams(n_agents=5)), ModelParams(n_agents=6), PhiloxStream(0), 1)
