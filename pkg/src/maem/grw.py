"""Geometric random walk ensemble, the multiplicative-noise reference model
for the growth/decay boundary of the poorest agents.

Each walker evolves in log space as ``ln w <- ln w + (mu - sigma**2/2) + sigma * xi``
with standard normal ``xi``. The mean then grows as ``exp(mu t)`` while the
median grows as ``exp((mu - sigma**2/2) t)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from maem.errors import ConfigError
from maem.parallel import ordered_map

MARGINAL_BAND = 1e-12
# walkers per independent random stream; sharding groups whole blocks, so
# results do not depend on how many threads share the work
BLOCK_SIZE = 4096


@dataclass(frozen=True)
class GrwParams:
    mu: float = 0.01
    sigma: float = 0.2
    n_walkers: int = 10_000
    seed: int = 0

    def __post_init__(self):
        for name in ("mu", "sigma"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, float, np.floating, np.integer)) or not math.isfinite(v):
                raise ConfigError(name, f"must be a finite real number, got {v!r}")
        if self.sigma < 0:
            raise ConfigError("sigma", "sigma must be >= 0")
        if isinstance(self.n_walkers, bool) or not isinstance(self.n_walkers, (int, np.integer)) or self.n_walkers < 1:
            raise ConfigError("n_walkers", "n_walkers must be an integer >= 1")
        if isinstance(self.seed, bool) or not isinstance(self.seed, (int, np.integer)) or not 0 <= self.seed < 2**64:
            raise ConfigError("seed", "seed must be a 64-bit unsigned integer")

    @property
    def delta(self) -> float:
        """Median growth rate ``mu - sigma**2 / 2``."""
        return self.mu - 0.5 * self.sigma**2


def block_generator(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(block,))))


def grw_step(wealths, params: GrwParams, rng: np.random.Generator) -> np.ndarray:
    """One multiplicative step for every walker; returns new wealths."""
    w = np.asarray(wealths, dtype=np.float64)
    if np.any(w <= 0):
        raise ValueError("walker wealths must be positive")
    if params.sigma == 0:
        return w * math.exp(params.mu)
    xi = rng.standard_normal(w.shape)
    return np.exp(np.log(w) + params.delta + params.sigma * xi)


def classify_boundary(params: GrwParams) -> str:
    """'grows', 'decays' or 'marginal' from the sign of ``mu - sigma**2/2``."""
    d = params.delta
    if abs(d) < MARGINAL_BAND:
        return "marginal"
    return "grows" if d > 0 else "decays"


@dataclass
class GrwEnsemble:
    """Log-wealth statistics of an ensemble started at ``w = 1``.

    ``times`` runs 0..n_steps; ``median_log`` is the sample median of
    ``ln w`` and ``mean_ratio`` the sample mean of ``w(t)/w(0)``, with its
    standard error in ``mean_sem``.
    """

    params: GrwParams
    times: np.ndarray
    median_log: np.ndarray
    mean_ratio: np.ndarray
    mean_sem: np.ndarray
    final_log: np.ndarray

    def median_slope(self) -> float:
        return float(np.polyfit(self.times.astype(np.float64), self.median_log, 1)[0])

    def records(self):
        return [
            {"t": int(t), "median_log_w": float(m), "mean_w": float(a), "mean_w_sem": float(e)}
            for t, m, a, e in zip(self.times, self.median_log, self.mean_ratio, self.mean_sem)
        ]


def simulate_ensemble(params: GrwParams, n_steps: int, *, threads: int = 1) -> GrwEnsemble:
    """Evolve ``n_walkers`` independent walkers for ``n_steps`` steps."""
    if n_steps < 0:
        raise ValueError("n_steps must be nonnegative")
    n = params.n_walkers
    starts = range(0, n, BLOCK_SIZE)

    def run_block(b_start):
        b = b_start // BLOCK_SIZE
        size = min(BLOCK_SIZE, n - b_start)
        rng = block_generator(params.seed, b)
        logw = np.zeros(size)
        hist = np.empty((n_steps + 1, size))
        hist[0] = 0.0
        for t in range(1, n_steps + 1):
            if params.sigma == 0:
                logw += params.mu
            else:
                logw += params.delta + params.sigma * rng.standard_normal(size)
            hist[t] = logw
        return hist

    hist = np.concatenate(ordered_map(run_block, starts, threads), axis=1)
    ratio = np.exp(hist)
    sem = ratio.std(axis=1, ddof=1) / math.sqrt(n) if n > 1 else np.zeros(n_steps + 1)
    return GrwEnsemble(
        params=params,
        times=np.arange(n_steps + 1),
        median_log=np.median(hist, axis=1),
        mean_ratio=ratio.mean(axis=1),
        mean_sem=sem,
        final_log=hist[-1].copy(),
    )


def empirical_direction(ensemble: GrwEnsemble) -> str:
    """'grows' or 'decays' from the least-squares slope of the median ``ln w``."""
    return "grows" if ensemble.median_slope() > 0 else "decays"
