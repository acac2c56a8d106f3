import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from maem.config import KINDS, SCHEMAS, parse_config, serialize_config
from maem.errors import ConfigError, ResultsIOError
from maem.io import config_from_results, read_results, render_results, write_results


def test_empty_trajectory_document_gives_defaults():
    cfg = parse_config("", "trajectory")
    assert (cfg.n_agents, cfg.gamma, cfg.mu, cfg.alpha) == (2500, 0.9, 1e-3, 0.1)
    assert cfg.seed == 0


def test_constraint_error_names_key():
    with pytest.raises(ConfigError, match="alpha must be in \\[0,1\\)") as err:
        parse_config("alpha: 1.5", "trajectory")
    assert err.value.key == "alpha"


def test_unknown_key_rejected():
    with pytest.raises(ConfigError) as err:
        parse_config("gama: 0.9", "trajectory")
    assert err.value.key == "gama"


@pytest.mark.parametrize(
    "text,key",
    [
        ("t_max: ten", "t_max"),
        ("t_max: 10.5", "t_max"),
        ("record_every: 0", "record_every"),
        ("n_agents: 1", "n_agents"),
        ("gamma: -1", "gamma"),
        ("fraction: 2", "fraction"),
        ("experiment: grw", "experiment"),
        ("[1, 2]", "config"),
        ("a: [", "config"),
    ],
)
def test_bad_values_name_the_key(text, key):
    with pytest.raises(ConfigError) as err:
        parse_config(text, "trajectory")
    assert err.value.key == key


def test_exponent_without_dot_is_a_number():
    assert parse_config("mu: 1e-4\nt_max: 1e4", "ergodicity").mu == 1e-4
    assert parse_config("t_max: 1e4", "ergodicity").t_max == 10_000


def test_phase_grid_axes():
    cfg = parse_config("mu_points: 9\nalpha_points: 9", "phase-grid")
    mu = cfg.mu_values()
    assert mu.size == 9 and mu[0] == pytest.approx(1e-5) and mu[-1] == pytest.approx(0.1)
    cfg = parse_config("mu_values: [0.001, 0.01]\nalpha_values: [0.1]", "phase-grid")
    assert cfg.mu_values().tolist() == [0.001, 0.01]
    with pytest.raises(ConfigError):
        parse_config("alpha_values: [0.5, 1.2]", "phase-grid")


@pytest.mark.parametrize("kind", KINDS)
def test_round_trip_defaults(kind):
    cfg = parse_config("", kind)
    assert parse_config(serialize_config(cfg)) == cfg


@settings(max_examples=40, deadline=None)
@given(
    gamma=st.floats(0, 3),
    mu=st.floats(0, 0.5),
    alpha=st.floats(0, 0.99),
    n=st.integers(2, 10**5),
    seed=st.integers(0, 2**64 - 1),
    t_max=st.integers(1, 10**7),
)
def test_round_trip_property(gamma, mu, alpha, n, seed, t_max):
    text = f"gamma: {gamma!r}\nmu: {mu!r}\nalpha: {alpha!r}\nn_agents: {n}\nseed: {seed}\nt_max: {t_max}\n"
    cfg = parse_config(text, "trajectory")
    again = parse_config(serialize_config(cfg))
    assert again == cfg
    assert again.mu == mu and again.seed == seed


def test_every_field_has_a_default_listed():
    for kind, schema in SCHEMAS.items():
        for key, f in schema.items():
            assert f.default is not None or f.nullable, (kind, key)


def test_results_header_and_rows(tmp_path):
    cfg = parse_config("n_agents: 10", "trajectory")
    rows = [{"t": 1, "ws_max": 0.1, "C": math.nan}, {"t": 2, "ws_max": 1 / 3, "C": 0.5}]
    path = tmp_path / "r.csv"
    write_results(rows, path, cfg, {"collapse_time": None}, deterministic=True)
    text = path.read_text()
    assert "generated" not in text
    assert "0.33333333333333331" in text  # 17 significant digits
    header, back = read_results(path)
    assert header["experiment"] == "trajectory" and header["seed"] == 0
    assert back[1]["ws_max"] == 1 / 3
    assert math.isnan(back[0]["C"])
    assert config_from_results(path) == cfg


def test_timestamp_only_without_deterministic():
    cfg = parse_config("", "grw")
    a = render_results([{"t": 0}], cfg, deterministic=False)
    b = render_results([{"t": 0}], cfg, deterministic=True)
    assert "generated:" in a
    assert [ln for ln in a.splitlines() if "generated:" not in ln] == b.splitlines()


def test_write_failure_names_path(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(ResultsIOError, match="file"):
        write_results([{"t": 1}], blocker / "sub" / "out.csv")
