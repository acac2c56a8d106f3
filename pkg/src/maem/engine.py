"""Simulation state and dynamics of the modified asset exchange model.

Wealth is stored in normalized units: the vector always sums to ``N`` at a
time-unit boundary and the true total is tracked separately as
``log_total = ln(W(t)/W(0))``. Both the exchange transfer and the growth
share ``w_i**gamma / S`` are homogeneous in the wealth vector, so dropping
the overall scale changes nothing but keeps the numbers finite.

One time unit is ``N`` pairwise exchanges followed by a single growth
allocation of ``mu * W``. Growth therefore compounds discretely: after ``t``
units the true total is ``W(0) * (1 + mu)**t``, which differs from
``W(0) * exp(mu * t)`` by a relative ``~ mu**2 * t / 2``.

The in-place functions below mutate the state they are given and return it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba as nb
import numpy as np

from maem.errors import ConfigError, DegenerateStateError
from maem.rng import PhiloxStream, block_at, bounded

__all__ = [
    "ModelParams",
    "WealthState",
    "advance",
    "advance_unit",
    "exchange_step",
    "growth_shares",
    "growth_step",
    "init_state",
]


@dataclass(frozen=True)
class ModelParams:
    """Full parameterization of one run.

    Attributes:
        gamma: growth-weighting exponent (0 distributes growth equally,
            1 in proportion to wealth).
        mu: growth rate per time unit.
        alpha: fraction of the poorer agent's wealth at stake per exchange.
        n_agents: population size.
        seed: master seed of the run's random stream.
    """

    gamma: float = 0.9
    mu: float = 1e-3
    alpha: float = 0.1
    n_agents: int = 2500
    seed: int = 0

    def __post_init__(self):
        for name in ("gamma", "mu", "alpha"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, float, np.floating, np.integer)):
                raise ConfigError(name, f"must be a real number, got {value!r}")
            if not math.isfinite(value):
                raise ConfigError(name, "must be finite")
        if self.gamma < 0:
            raise ConfigError("gamma", "gamma must be >= 0")
        if self.mu < 0:
            raise ConfigError("mu", "mu must be >= 0")
        if not 0 <= self.alpha < 1:
            raise ConfigError("alpha", "alpha must be in [0,1)")
        if isinstance(self.n_agents, bool) or not isinstance(self.n_agents, (int, np.integer)):
            raise ConfigError("n_agents", f"must be an integer, got {self.n_agents!r}")
        if self.n_agents < 2:
            raise ConfigError("n_agents", "n_agents must be >= 2")
        if isinstance(self.seed, bool) or not isinstance(self.seed, (int, np.integer)):
            raise ConfigError("seed", f"must be an integer, got {self.seed!r}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed", "seed must be a 64-bit unsigned integer")

    def stream(self, *stream_ids: int) -> PhiloxStream:
        """Random stream for this run; ``stream_ids`` separate realizations."""
        return PhiloxStream(self.seed, *stream_ids)


@dataclass
class WealthState:
    """Per-agent wealth (summing to N), log of the true total, and the clock."""

    wealth: np.ndarray
    log_total: float = 0.0
    time: int = 0

    def __post_init__(self):
        self.wealth = np.ascontiguousarray(self.wealth, dtype=np.float64)
        if self.wealth.ndim != 1 or self.wealth.size < 2:
            raise ConfigError("wealth", "must be a 1-d vector of at least 2 agents")
        if np.any(self.wealth < 0) or not np.all(np.isfinite(self.wealth)):
            raise ConfigError("wealth", "entries must be finite and nonnegative")

    @classmethod
    def from_wealth(cls, wealth, time: int = 0) -> "WealthState":
        """Normalize an arbitrary wealth vector, keeping its scale in ``log_total``."""
        w = np.asarray(wealth, dtype=np.float64)
        total = w.sum()
        if not total > 0:
            raise DegenerateStateError("at least one agent must hold positive wealth")
        n = w.size
        return cls(w * (n / total), log_total=math.log(total / n), time=time)

    @property
    def n_agents(self) -> int:
        return self.wealth.size

    @property
    def rescaled(self) -> np.ndarray:
        """Share of total wealth held by each agent."""
        return self.wealth / self.wealth.sum()

    def true_wealth(self, initial_total: float | None = None) -> np.ndarray:
        """Absolute wealth, given the initial total (defaults to N)."""
        w0 = self.n_agents if initial_total is None else initial_total
        return self.wealth * math.exp(self.log_total) * (w0 / self.n_agents)

    def copy(self) -> "WealthState":
        return WealthState(self.wealth.copy(), self.log_total, self.time)


def init_state(params: ModelParams) -> WealthState:
    """Equal distribution: every agent starts with wealth 1."""
    if not isinstance(params, ModelParams):
        raise ConfigError("params", "expected ModelParams")
    return WealthState(np.ones(params.n_agents), log_total=0.0, time=0)


# ---------------------------------------------------------------------------
# kernels

@nb.njit(cache=True, nogil=True)
def _exchange_kernel(w, n_steps, alpha, k0, k1, counter):
    n = w.shape[0]
    one = np.uint64(1)
    for _ in range(n_steps):
        r0, r1, r2, _r3 = block_at(counter, k0, k1)
        counter += one
        i = bounded(r0, n)
        j = bounded(r1, n - 1)
        if j >= i:
            j += 1
        wi = w[i]
        wj = w[j]
        d = alpha * min(wi, wj)
        if r2 & one:
            w[i] = wi + d
            w[j] = wj - d
        else:
            w[i] = wi - d
            w[j] = wj + d
    return counter


@nb.njit(cache=True, nogil=True, inline="always")
def _share(x, gamma):
    # 0**gamma == 0 for every gamma >= 0, including gamma == 0
    if x <= 0.0:
        return 0.0
    if gamma == 0.0:
        return 1.0
    if gamma == 1.0:
        return x
    if gamma == 0.5:
        return math.sqrt(x)
    return x**gamma


@nb.njit(cache=True, nogil=True)
def _growth_kernel(w, gamma, mu, shares):
    """Allocate mu*W by w**gamma, then rescale to sum N. Returns False if S == 0."""
    n = w.shape[0]
    total = 0.0
    s = 0.0
    for i in range(n):
        x = _share(w[i], gamma)
        shares[i] = x
        total += w[i]
        s += x
    if not s > 0.0:
        return False
    scale = mu * total / s
    renorm = n / (total * (1.0 + mu))
    for i in range(n):
        w[i] = (w[i] + scale * shares[i]) * renorm
    return True


@nb.njit(cache=True, nogil=True)
def _growth_shares_kernel(w, gamma, mu, out):
    total = 0.0
    s = 0.0
    for i in range(w.shape[0]):
        x = _share(w[i], gamma)
        out[i] = x
        total += w[i]
        s += x
    if not s > 0.0:
        return False
    scale = mu * total / s
    for i in range(w.shape[0]):
        out[i] *= scale
    return True


@nb.njit(cache=True, nogil=True)
def _units_kernel(w, n_units, gamma, mu, alpha, k0, k1, counter):
    """Run whole time units. Returns (counter, number of completed units)."""
    n = w.shape[0]
    shares = np.empty(n)
    for u in range(n_units):
        if alpha > 0.0:
            counter = _exchange_kernel(w, n, alpha, k0, k1, counter)
        else:
            counter += np.uint64(n)
        if not _growth_kernel(w, gamma, mu, shares):
            return counter, u
    return counter, n_units


# ---------------------------------------------------------------------------
# public operations

def exchange_step(state: WealthState, params: ModelParams, rng: PhiloxStream, n_steps: int = 1) -> WealthState:
    """One yard-sale exchange (or ``n_steps`` of them) between uniformly random
    pairs ``i != j``.

    The stake is ``alpha * min(w_i, w_j)``; a fair coin picks the winner.
    """
    if n_steps < 0:
        raise ValueError("n_steps must be nonnegative")
    k0, k1, ctr = rng.kernel_args()
    rng.counter = int(_exchange_kernel(state.wealth, int(n_steps), float(params.alpha), k0, k1, ctr))
    return state


def growth_shares(wealth, gamma: float, mu: float) -> np.ndarray:
    """Growth increments ``mu * W * w_i**gamma / S`` with ``W = sum(w)``.

    No rescaling is applied. Raises DegenerateStateError if no agent holds
    positive wealth.
    """
    w = np.ascontiguousarray(wealth, dtype=np.float64)
    out = np.empty_like(w)
    if not _growth_shares_kernel(w, float(gamma), float(mu), out):
        raise DegenerateStateError("all agents have zero wealth; growth shares undefined")
    return out


def growth_step(state: WealthState, params: ModelParams) -> WealthState:
    """Distribute ``mu * W`` by ``w**gamma`` weights and renormalize to sum N.

    ``log_total`` grows by ``ln(1 + mu)``; the clock is left to the caller.
    """
    shares = np.empty_like(state.wealth)
    if not _growth_kernel(state.wealth, float(params.gamma), float(params.mu), shares):
        raise DegenerateStateError("all agents have zero wealth; growth shares undefined")
    state.log_total += math.log1p(params.mu)
    return state


def advance_unit(state: WealthState, params: ModelParams, rng: PhiloxStream) -> WealthState:
    """N exchanges, one growth allocation, then ``time += 1``."""
    return advance(state, params, rng, 1)


def advance(state: WealthState, params: ModelParams, rng: PhiloxStream, n_units: int) -> WealthState:
    """Advance ``n_units`` whole time units in compiled code.

    Equivalent to calling :func:`advance_unit` ``n_units`` times, except that
    ``log_total`` is incremented once by ``n_units * ln(1 + mu)``.
    """
    if n_units < 0:
        raise ValueError("n_units must be nonnegative")
    if state.n_agents != params.n_agents:
        raise ConfigError("n_agents", f"state has {state.n_agents} agents, params say {params.n_agents}")
    k0, k1, ctr = rng.kernel_args()
    ctr, done = _units_kernel(
        state.wealth, int(n_units), float(params.gamma), float(params.mu),
        float(params.alpha), k0, k1, ctr,
    )
    rng.counter = int(ctr)
    # a failed unit has already consumed its exchanges
    state.time += int(done)
    state.log_total += done * math.log1p(params.mu)
    if done < n_units:
        state.time += 1
        raise DegenerateStateError(f"all agents bankrupt at t={state.time}; growth shares undefined")
    return state
