"""Statistics computed from wealth states: rank snapshots, percentile means,
rank mobility and the time-average wealth metric."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from maem.errors import UndefinedCorrelationError

__all__ = [
    "MetricAccumulator",
    "RankSnapshot",
    "max_rescaled",
    "metric_update",
    "metric_value",
    "pearson_rank_correlation",
    "percentile_count",
    "percentile_mean",
    "rank_snapshot",
]


@dataclass(frozen=True)
class RankSnapshot:
    """Rescaled wealth sorted richest first, and each agent's rank.

    ``agent_ranks[i]`` is the rank of agent ``i``; rank 0 is the richest and
    ties go to the lower agent id.
    """

    time: int
    sorted_rescaled: np.ndarray
    agent_ranks: np.ndarray

    @property
    def n_agents(self) -> int:
        return self.sorted_rescaled.size

    def rescaled_by_agent(self) -> np.ndarray:
        return self.sorted_rescaled[self.agent_ranks]


def rank_snapshot(state) -> RankSnapshot:
    """Rank a :class:`~maem.engine.WealthState` (or a bare wealth vector)."""
    wealth = getattr(state, "wealth", state)
    time = getattr(state, "time", 0)
    w = np.asarray(wealth, dtype=np.float64)
    order = np.argsort(-w, kind="stable")
    ranks = np.empty(w.size, dtype=np.int64)
    ranks[order] = np.arange(w.size)
    return RankSnapshot(int(time), w[order] / w.sum(), ranks)


def percentile_count(n_agents: int, fraction: float) -> int:
    """Number of agents in a ``fraction`` tail: ``max(1, floor(fraction * N))``."""
    if not 0 < fraction <= 1:
        raise ValueError("fraction must be in (0, 1]")
    # the small nudge keeps e.g. 0.01 * 2500 from flooring to 24
    return max(1, int(np.floor(fraction * n_agents + 1e-9)))


def percentile_mean(snapshot: RankSnapshot, which: str = "poorest", fraction: float = 0.01) -> float:
    """Mean rescaled wealth of the poorest or richest ``fraction`` of agents."""
    m = percentile_count(snapshot.n_agents, fraction)
    if which == "poorest":
        return float(snapshot.sorted_rescaled[-m:].mean())
    if which == "richest":
        return float(snapshot.sorted_rescaled[:m].mean())
    raise ValueError(f"which must be 'poorest' or 'richest', got {which!r}")


def max_rescaled(snapshot: RankSnapshot) -> float:
    return float(snapshot.sorted_rescaled[0])


def pearson_rank_correlation(ranks_t, ranks_0) -> float:
    """Pearson correlation between two rank assignments of the same agents.

    The mean subtracted is the sample mean of each sequence, which for a
    permutation of ``0..N-1`` is ``(N-1)/2``.
    """
    a = np.asarray(ranks_t, dtype=np.float64)
    b = np.asarray(ranks_0, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("rank sequences must be 1-d and of equal length")
    if a.size < 2:
        raise UndefinedCorrelationError("correlation needs at least two agents")
    da = a - a.mean()
    db = b - b.mean()
    denom = np.sqrt(np.dot(da, da) * np.dot(db, db))
    if denom == 0:
        raise UndefinedCorrelationError("rank sequence has zero variance")
    return float(np.clip(np.dot(da, db) / denom, -1.0, 1.0))


@dataclass
class MetricAccumulator:
    """Running per-agent time averages of rescaled wealth.

    The average is over recorded epochs with uniform weight, starting at
    ``start_time``. Sums are kept rather than means so that the average after
    ``k`` epochs is the plain arithmetic mean of the recorded values.
    """

    start_time: int
    running_sum: np.ndarray
    epoch_count: int = 0

    @classmethod
    def empty(cls, n_agents: int, start_time: int = 0) -> "MetricAccumulator":
        return cls(start_time, np.zeros(n_agents), 0)

    @property
    def running_time_averages(self) -> np.ndarray:
        if self.epoch_count == 0:
            raise ValueError("no epochs recorded yet")
        return self.running_sum / self.epoch_count


def metric_update(acc: MetricAccumulator, snapshot: RankSnapshot) -> MetricAccumulator:
    """Fold one snapshot into the running time averages (in place)."""
    if snapshot.time < acc.start_time:
        raise ValueError(f"snapshot at t={snapshot.time} precedes start_time={acc.start_time}")
    acc.running_sum += snapshot.rescaled_by_agent()
    acc.epoch_count += 1
    return acc


def metric_value(acc: MetricAccumulator) -> float:
    """Population variance of the agents' time-averaged rescaled wealth."""
    avg = acc.running_time_averages
    return float(np.mean((avg - avg.mean()) ** 2))
