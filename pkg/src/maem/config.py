"""Run configuration: a flat YAML mapping per experiment kind.

Every key has a default, unknown keys are rejected, and the fully resolved
configuration is what gets echoed into result headers, so a results file is
enough to rerun its experiment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Callable

import numpy as np
import yaml

from maem.engine import ModelParams
from maem.errors import ConfigError
from maem.experiments import (
    COLLAPSE_EXCLUDE_BOTTOM,
    COLLAPSE_TOL,
    DEFAULT_ALPHA_RANGE,
    DEFAULT_GRID_POINTS,
    DEFAULT_MU_RANGE,
    DEFAULT_REALIZATIONS,
    MOBILITY_REFERENCE_TIME,
)
from maem.grw import GrwParams

KINDS = ("trajectory", "phase-grid", "finite-size", "mobility", "ergodicity", "transient", "grw")


@dataclass(frozen=True)
class Field:
    kind: str  # float | int | str | bool | floats | ints
    default: Any
    check: Callable[[Any], str | None] | None = None
    nullable: bool = False


def _positive(v):
    return None if v > 0 else "must be > 0"


def _at_least(n):
    return lambda v: None if v >= n else f"must be >= {n}"


def _fraction(v):
    return None if 0 < v <= 1 else "must be in (0, 1]"


def _nonneg(v):
    return None if v >= 0 else "must be >= 0"


def _which(v):
    return None if v in ("poorest", "richest") else "must be 'poorest' or 'richest'"


def _increasing(v):
    if len(v) == 0:
        return "must be non-empty"
    return None if all(b > a for a, b in zip(v, v[1:])) else "must be strictly increasing"


def _model(gamma, mu, alpha, n_agents):
    return {
        "gamma": Field("float", gamma),
        "mu": Field("float", mu),
        "alpha": Field("float", alpha),
        "n_agents": Field("int", n_agents),
    }


_COMMON = {"seed": Field("int", 0), "out": Field("str", None, nullable=True)}

SCHEMAS: dict[str, dict[str, Field]] = {
    "trajectory": {
        **_model(0.9, 1e-3, 0.1, 2500),
        "t_max": Field("int", 40_000, _at_least(1)),
        "record_every": Field("int", 1000, _at_least(1)),
        "realizations": Field("int", 64, _at_least(1)),
        "sample_every": Field("int", 100, _at_least(1), nullable=True),
        "reference_time": Field("int", MOBILITY_REFERENCE_TIME, _at_least(0), nullable=True),
        "fraction": Field("float", 0.01, _fraction),
        "collapse_tol": Field("float", COLLAPSE_TOL, _positive),
        "exclude_bottom": Field("float", COLLAPSE_EXCLUDE_BOTTOM, _nonneg),
    },
    "phase-grid": {
        **_model(1.0, 1e-3, 0.1, 2500),
        "mu_min": Field("float", DEFAULT_MU_RANGE[0], _positive),
        "mu_max": Field("float", DEFAULT_MU_RANGE[1], _positive),
        "mu_points": Field("int", DEFAULT_GRID_POINTS, _at_least(1)),
        "alpha_min": Field("float", DEFAULT_ALPHA_RANGE[0], _positive),
        "alpha_max": Field("float", DEFAULT_ALPHA_RANGE[1], _positive),
        "alpha_points": Field("int", DEFAULT_GRID_POINTS, _at_least(1)),
        "mu_values": Field("floats", None, _increasing, nullable=True),
        "alpha_values": Field("floats", None, _increasing, nullable=True),
        "t_final": Field("int", 1000, _at_least(1)),
        "realizations": Field("int", DEFAULT_REALIZATIONS, _at_least(1)),
        "which": Field("str", "poorest", _which),
        "fraction": Field("float", 0.01, _fraction),
        "fit_boundary": Field("bool", False),
    },
    "finite-size": {
        **_model(0.0, 1e-2, 0.05, 100),
        "n_values": Field("ints", [100, 400, 1600], _increasing),
        "t_final": Field("int", 5000, _at_least(1)),
        "realizations": Field("int", DEFAULT_REALIZATIONS, _at_least(1)),
    },
    "mobility": {
        **_model(0.9, 1e-3, 0.1, 1000),
        "t_max": Field("int", 20_000, _at_least(2)),
        "record_every": Field("int", 100, _at_least(1)),
        "realizations": Field("int", 8, _at_least(1)),
        "reference_time": Field("int", MOBILITY_REFERENCE_TIME, _at_least(1)),
    },
    "ergodicity": {
        **_model(0.5, 1e-4, 0.01, 1000),
        "t_max": Field("int", 1_000_000, _at_least(1)),
        "record_every": Field("int", 1000, _at_least(1)),
        "realizations": Field("int", 1, _at_least(1)),
        "metric_start": Field("int", None, _at_least(1), nullable=True),
    },
    "transient": {
        **_model(0.9, 1e-3, 0.1, 400),
        "gamma_values": Field("floats", [0.5, 0.7, 0.8, 0.9], _increasing),
        "t_max": Field("int", 128_000, _at_least(1)),
        "t_first": Field("int", 100, _at_least(1)),
        "per_octave": Field("int", 4, _at_least(1)),
        "realizations": Field("int", 64, _at_least(1)),
        "sample_every": Field("int", 10, _at_least(1), nullable=True),
        "collapse_tol": Field("float", COLLAPSE_TOL, _positive),
        "exclude_bottom": Field("float", COLLAPSE_EXCLUDE_BOTTOM, _nonneg),
    },
    "grw": {
        "mu": Field("float", 0.01),
        "sigma": Field("float", 0.2, _nonneg),
        "n_walkers": Field("int", 10_000, _at_least(1)),
        "n_steps": Field("int", 1000, _at_least(1)),
    },
}
for _schema in SCHEMAS.values():
    _schema.update(_COMMON)


def _coerce(key: str, f: Field, value):
    if value is None:
        if f.nullable:
            return None
        raise ConfigError(key, "must not be null")
    k = f.kind
    if k in ("floats", "ints"):
        if not isinstance(value, (list, tuple)):
            raise ConfigError(key, f"must be a list, got {value!r}")
        elem = Field(k[:-1], None)
        return [_coerce(f"{key}[{i}]", elem, v) for i, v in enumerate(value)]
    if k == "bool":
        if isinstance(value, bool):
            return value
        raise ConfigError(key, f"must be true or false, got {value!r}")
    if k == "str":
        if isinstance(value, str):
            return value
        raise ConfigError(key, f"must be a string, got {value!r}")
    if isinstance(value, bool):
        raise ConfigError(key, f"must be a number, got {value!r}")
    if isinstance(value, str):
        # YAML 1.1 reads exponent forms without a dot (1e-3) as strings
        try:
            value = float(value)
        except ValueError:
            raise ConfigError(key, f"must be a number, got {value!r}") from None
    if not isinstance(value, (int, float)):
        raise ConfigError(key, f"must be a number, got {value!r}")
    if k == "float":
        value = float(value)
        if not math.isfinite(value):
            raise ConfigError(key, "must be finite")
        return value
    if isinstance(value, float):
        if not value.is_integer():
            raise ConfigError(key, f"must be an integer, got {value!r}")
        value = int(value)
    return value


@dataclass(frozen=True)
class RunConfig:
    """Validated, fully resolved configuration of one experiment."""

    experiment: str
    values: dict

    def __getattr__(self, name):
        try:
            return self.__dict__["values"][name]
        except KeyError:
            raise AttributeError(name) from None

    def __getitem__(self, name):
        return self.values[name]

    def resolved(self) -> dict:
        return {"experiment": self.experiment, **self.values}

    def replace(self, **overrides) -> "RunConfig":
        merged = {**self.values, **{k: v for k, v in overrides.items() if v is not None}}
        return build_config(self.experiment, merged)

    def model_params(self, **overrides) -> ModelParams:
        v = {**self.values, **overrides}
        return ModelParams(v["gamma"], v["mu"], v["alpha"], v["n_agents"], v["seed"])

    def grw_params(self) -> GrwParams:
        v = self.values
        return GrwParams(v["mu"], v["sigma"], v["n_walkers"], v["seed"])

    def mu_values(self) -> np.ndarray:
        return self._axis("mu")

    def alpha_values(self) -> np.ndarray:
        return self._axis("alpha")

    def _axis(self, name):
        explicit = self.values.get(f"{name}_values")
        if explicit is not None:
            return np.asarray(explicit, dtype=np.float64)
        lo, hi, n = (self.values[f"{name}_{s}"] for s in ("min", "max", "points"))
        return np.logspace(math.log10(lo), math.log10(hi), n)


def build_config(experiment: str, mapping: dict) -> RunConfig:
    if experiment not in SCHEMAS:
        raise ConfigError("experiment", f"must be one of {', '.join(KINDS)}, got {experiment!r}")
    schema = SCHEMAS[experiment]
    for key in mapping:
        if key not in schema:
            raise ConfigError(key, f"unknown key for experiment '{experiment}'")
    values = {}
    for key, f in schema.items():
        raw = mapping.get(key, f.default)
        v = _coerce(key, f, raw)
        if v is not None and f.check is not None:
            msg = f.check(v)
            if msg:
                raise ConfigError(key, f"{key} {msg}")
        values[key] = v
    cfg = RunConfig(experiment, values)
    _cross_check(cfg)
    return cfg


def _cross_check(cfg: RunConfig):
    v = cfg.values
    if not 0 <= v["seed"] < 2**64:
        raise ConfigError("seed", "seed must be a 64-bit unsigned integer")
    if cfg.experiment == "grw":
        cfg.grw_params()
        return
    cfg.model_params()  # gamma/mu/alpha/n_agents constraints
    if cfg.experiment == "phase-grid":
        for name in ("mu", "alpha"):
            if v[f"{name}_values"] is None and v[f"{name}_min"] > v[f"{name}_max"]:
                raise ConfigError(f"{name}_min", f"{name}_min must be <= {name}_max")
        for mu in cfg.mu_values():
            if mu < 0:
                raise ConfigError("mu_values", "mu must be >= 0")
        for alpha in cfg.alpha_values():
            if not 0 <= alpha < 1:
                raise ConfigError("alpha_values", "alpha must be in [0,1)")
    if cfg.experiment == "finite-size" and v["n_values"][0] < 2:
        raise ConfigError("n_values", "n_agents must be >= 2")
    if cfg.experiment == "mobility" and v["reference_time"] >= v["t_max"]:
        raise ConfigError("reference_time", "reference_time must be < t_max")
    if cfg.experiment == "transient":
        if any(g < 0 or g >= 1 for g in v["gamma_values"]):
            raise ConfigError("gamma_values", "every gamma must be in [0, 1)")
        if v["t_first"] > v["t_max"]:
            raise ConfigError("t_first", "t_first must be <= t_max")


def parse_config(text: str, experiment: str | None = None) -> RunConfig:
    """Parse a YAML key-value document into a validated :class:`RunConfig`.

    The experiment kind comes from the ``experiment`` key or the argument;
    if both are given they must agree.
    """
    try:
        doc = yaml.safe_load(text) if text and text.strip() else {}
    except yaml.YAMLError as exc:
        raise ConfigError("config", f"not a valid YAML document ({exc})") from None
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError("config", "document must be a key-value mapping")
    doc = dict(doc)
    kind = doc.pop("experiment", None)
    if kind is None:
        kind = experiment
    elif experiment is not None and kind != experiment:
        raise ConfigError("experiment", f"document says {kind!r} but {experiment!r} was requested")
    if kind is None:
        raise ConfigError("experiment", "experiment kind not given")
    return build_config(kind, doc)


def serialize_config(cfg: RunConfig) -> str:
    """YAML text that :func:`parse_config` maps back to an equal config."""
    return yaml.safe_dump(cfg.resolved(), sort_keys=False, default_flow_style=False)
