"""Experiment drivers built on the engine: trajectories and ensembles,
collapse detection, (mu, alpha) phase grids and the gamma = 1 boundary fit,
finite-size scans, mobility, ergodicity and transient-time scaling.

Every realization draws from its own Philox stream. Streams of grid cells
are keyed by the parameter values themselves (not by grid position), so a
cell's result does not depend on which other cells are computed alongside.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from maem.engine import ModelParams, WealthState, advance, init_state
from maem.errors import DegenerateStateError, InsufficientDataError
from maem.observables import (
    MetricAccumulator,
    max_rescaled,
    metric_update,
    metric_value,
    pearson_rank_correlation,
    percentile_count,
    percentile_mean,
    rank_snapshot,
)
from maem.parallel import ordered_map
from maem.rng import PhiloxStream

COLLAPSE_TOL = 0.05
COLLAPSE_EXCLUDE_BOTTOM = 0.01
# ranks are compared against a reference taken once the rescaled
# distribution has settled; at t = 1 they are still tie-break noise
MOBILITY_REFERENCE_TIME = 10_000
DEFAULT_REALIZATIONS = 16
DEFAULT_MU_RANGE = (1e-5, 1e-1)
DEFAULT_ALPHA_RANGE = (1e-3, 0.5)
DEFAULT_GRID_POINTS = 13


def value_bits(x: float) -> int:
    """IEEE-754 bit pattern of a float, for keying random streams by value."""
    return struct.unpack("<Q", struct.pack("<d", float(x)))[0]


def uniform_schedule(t_max: int, record_every: int) -> np.ndarray:
    if t_max < 1:
        raise ValueError("t_max must be >= 1")
    if record_every < 1:
        raise ValueError("record_every must be >= 1")
    times = np.arange(record_every, t_max + 1, record_every, dtype=np.int64)
    if times.size == 0 or times[-1] != t_max:
        times = np.append(times, t_max)
    return times


def doubling_schedule(t_first: int, t_max: int, per_octave: int = 4) -> np.ndarray:
    """Geometric record times where every time ``t`` beyond the first octave
    is exactly twice an earlier one, so ``(t, 2t)`` pairs always exist."""
    base = sorted({max(1, round(t_first * 2 ** (k / per_octave))) for k in range(per_octave)})
    times = set()
    scale = 1
    while base[0] * scale <= t_max:
        times.update(b * scale for b in base if b * scale <= t_max)
        scale *= 2
    return np.array(sorted(times), dtype=np.int64)


# ---------------------------------------------------------------------------
# trajectories

@dataclass
class ObservableSeries:
    """Time-indexed statistics of one run or the mean over an ensemble.

    ``log_profiles[k]`` is ``ln`` of the rank-ordered rescaled wealth at
    ``times[k]`` (richest first); for ensembles it is the mean of the
    per-run log profiles. ``corr`` is NaN before ``reference_time`` and
    ``omega``/``omega_ratio`` are NaN before the first metric epoch.
    """

    params: ModelParams
    times: np.ndarray
    log_total: np.ndarray
    ws_max: np.ndarray
    poorest: np.ndarray
    richest: np.ndarray
    corr: np.ndarray
    omega: np.ndarray
    omega_ratio: np.ndarray
    log_profiles: np.ndarray | None = None
    reference_time: int | None = None
    realizations: int = 1
    fraction: float = 0.01

    def __len__(self):
        return self.times.size

    def records(self) -> list[dict]:
        return [
            {
                "t": int(self.times[k]),
                "log_total": float(self.log_total[k]),
                "ws_max": float(self.ws_max[k]),
                "poorest1pct": float(self.poorest[k]),
                "richest1pct": float(self.richest[k]),
                "C": float(self.corr[k]),
                "omega_ratio": float(self.omega_ratio[k]),
            }
            for k in range(len(self))
        ]


def _log_profile(state: WealthState) -> np.ndarray:
    w = np.sort(state.wealth)[::-1]
    with np.errstate(divide="ignore"):
        return np.log(w / w.sum())


def run_trajectory(
    params: ModelParams,
    t_max: int,
    record_every: int = 10,
    *,
    record_times: Sequence[int] | None = None,
    reference_time: int | None = 1,
    metric_start: int | None = None,
    sample_every: int | None = None,
    fraction: float = 0.01,
    keep_profiles: bool = True,
    stream: PhiloxStream | None = None,
    initial: WealthState | None = None,
) -> ObservableSeries:
    """Run one trajectory and record observables.

    Records are taken at multiples of ``record_every`` (plus ``t_max``) or at
    the explicit ``record_times``. With ``sample_every`` the stored log
    profile at each record is the mean over samples taken every
    ``sample_every`` units since the previous record; the scalar
    observables are always instantaneous.
    """
    if record_times is None:
        times = uniform_schedule(t_max, record_every)
    else:
        times = np.asarray(sorted(set(int(t) for t in record_times)), dtype=np.int64)
        if times.size == 0 or times[0] < 1 or times[-1] > t_max:
            raise ValueError("record_times must lie in [1, t_max]")
    state = init_state(params) if initial is None else initial.copy()
    t_start = state.time
    if times[0] <= t_start:
        raise ValueError("record times must come after the initial state's time")
    rng = params.stream(0) if stream is None else stream
    metric_start = int(times[0]) if metric_start is None else int(metric_start)

    n_rec = times.size
    out = {k: np.full(n_rec, np.nan) for k in ("log_total", "ws_max", "poorest", "richest", "corr", "omega", "ratio")}
    profiles = np.empty((n_rec, params.n_agents)) if keep_profiles else None
    ref_ranks = None
    if reference_time is not None and reference_time <= t_start:
        ref_ranks = rank_snapshot(state).agent_ranks
    acc = MetricAccumulator.empty(params.n_agents, metric_start)
    omega_first = None

    prev = t_start
    for k, t in enumerate(times):
        t = int(t)
        stops = []
        if sample_every and keep_profiles:
            first = (prev // sample_every + 1) * sample_every
            stops.extend(range(first, t, sample_every))
        if ref_ranks is None and reference_time is not None and prev < reference_time <= t:
            stops.append(int(reference_time))
        stops = sorted(set(stops)) + [t]
        prof_sum = None
        n_samples = 0
        for stop in stops:
            if stop > state.time:
                advance(state, params, rng, stop - state.time)
            if stop == reference_time and ref_ranks is None:
                ref_ranks = rank_snapshot(state).agent_ranks
            if sample_every and keep_profiles:
                lp = _log_profile(state)
                prof_sum = lp if prof_sum is None else prof_sum + lp
                n_samples += 1

        snap = rank_snapshot(state)
        out["log_total"][k] = state.log_total
        out["ws_max"][k] = max_rescaled(snap)
        out["poorest"][k] = percentile_mean(snap, "poorest", fraction)
        out["richest"][k] = percentile_mean(snap, "richest", fraction)
        if ref_ranks is not None:
            out["corr"][k] = pearson_rank_correlation(snap.agent_ranks, ref_ranks)
        if t >= metric_start:
            metric_update(acc, snap)
            om = metric_value(acc)
            out["omega"][k] = om
            if omega_first is None:
                omega_first = om
            out["ratio"][k] = omega_first / om if om > 0 else np.nan
        if keep_profiles:
            if prof_sum is not None:
                profiles[k] = prof_sum / n_samples
            else:
                with np.errstate(divide="ignore"):
                    profiles[k] = np.log(snap.sorted_rescaled)
        prev = t

    return ObservableSeries(
        params=params,
        times=times,
        log_total=out["log_total"],
        ws_max=out["ws_max"],
        poorest=out["poorest"],
        richest=out["richest"],
        corr=out["corr"],
        omega=out["omega"],
        omega_ratio=out["ratio"],
        log_profiles=profiles,
        reference_time=reference_time,
        realizations=1,
        fraction=fraction,
    )


def mean_series(runs: Sequence[ObservableSeries]) -> ObservableSeries:
    """Average independent runs recorded on the same schedule."""
    first = runs[0]
    for r in runs[1:]:
        if not np.array_equal(r.times, first.times):
            raise ValueError("runs were recorded on different schedules")

    def avg(name):
        return np.mean([getattr(r, name) for r in runs], axis=0)

    profiles = None
    if all(r.log_profiles is not None for r in runs):
        profiles = np.zeros_like(first.log_profiles)
        with np.errstate(invalid="ignore"):
            for r in runs:
                profiles += r.log_profiles
        profiles /= len(runs)
    return ObservableSeries(
        params=first.params,
        times=first.times.copy(),
        log_total=avg("log_total"),
        ws_max=avg("ws_max"),
        poorest=avg("poorest"),
        richest=avg("richest"),
        corr=avg("corr"),
        omega=avg("omega"),
        omega_ratio=avg("omega_ratio"),
        log_profiles=profiles,
        reference_time=first.reference_time,
        realizations=sum(r.realizations for r in runs),
        fraction=first.fraction,
    )


def run_ensemble(
    params: ModelParams,
    t_max: int,
    record_every: int = 10,
    realizations: int = 1,
    *,
    threads: int = 1,
    stream_prefix: tuple = (),
    **kwargs,
) -> ObservableSeries:
    """Mean of ``realizations`` independent trajectories.

    Realization ``q`` uses the stream ``(params.seed, *stream_prefix, q)``;
    the result is identical for any thread count.
    """
    if realizations < 1:
        raise ValueError("realizations must be >= 1")

    def one(q):
        return run_trajectory(
            params, t_max, record_every, stream=params.stream(*stream_prefix, q), **kwargs
        )

    runs = ordered_map(one, range(realizations), threads)
    return runs[0] if realizations == 1 else mean_series(runs)


# ---------------------------------------------------------------------------
# rescaled steady state

def collapse_distances(series: ObservableSeries, exclude_bottom: float = COLLAPSE_EXCLUDE_BOTTOM):
    """``max_rank |ln ws_rank(t) - ln ws_rank(2t)|`` for every recorded pair."""
    if series.log_profiles is None:
        raise ValueError("series was recorded without rank profiles")
    n = series.log_profiles.shape[1]
    m = n - percentile_count(n, exclude_bottom) if exclude_bottom > 0 else n
    index = {int(t): k for k, t in enumerate(series.times)}
    pairs = []
    with np.errstate(invalid="ignore"):
        for k, t in enumerate(series.times):
            j = index.get(2 * int(t))
            if j is None or t <= 0:
                continue
            diff = np.abs(series.log_profiles[k, :m] - series.log_profiles[j, :m])
            d = float(np.max(diff)) if not np.any(np.isnan(diff)) else math.inf
            pairs.append((int(t), d))
    return pairs


def detect_collapse(
    series: ObservableSeries,
    tol: float = COLLAPSE_TOL,
    exclude_bottom: float = COLLAPSE_EXCLUDE_BOTTOM,
) -> int | None:
    """Earliest recorded ``t`` from which every pair ``(t', 2t')`` with
    ``t' >= t`` agrees rank by rank to within ``tol`` in ``ln ws``.

    The poorest ``exclude_bottom`` fraction of ranks is ignored. Returns None
    when no such time exists.
    """
    if len(series) < 4:
        raise ValueError("collapse detection needs at least 4 recorded snapshots")
    if not tol > 0:
        raise ValueError("tol must be positive")
    t_star = None
    for t, d in reversed(collapse_distances(series, exclude_bottom)):
        if d < tol:
            t_star = t
        else:
            break
    return t_star


# ---------------------------------------------------------------------------
# phase grids

@dataclass
class PhaseGrid:
    """Late-time statistic over a (mu, alpha) lattice at fixed gamma.

    ``stat[i, j]`` is ``ln`` of the realization-mean percentile wealth
    (rescaled) at ``t_final`` for ``mu_values[i]``, ``alpha_values[j]``.
    ``slope[i, j]`` is the least-squares time slope of ``ln`` of the same
    mean in true (unrescaled) units over the second half of the run; its sign
    classifies the cell as growing or decaying.
    """

    gamma: float
    mu_values: np.ndarray
    alpha_values: np.ndarray
    stat: np.ndarray
    t_final: int
    realizations: int
    which: str = "poorest"
    fraction: float = 0.01
    slope: np.ndarray | None = None
    n_missing: np.ndarray | None = None
    labels: np.ndarray | None = None
    n_agents: int | None = None

    @property
    def classification(self) -> np.ndarray:
        """+1 grows, -1 decays, 0 unknown."""
        if self.labels is not None:
            return np.asarray(self.labels, dtype=np.int64)
        if self.slope is None:
            raise ValueError("grid carries neither slopes nor labels")
        s = np.nan_to_num(np.sign(self.slope), nan=0.0)
        return s.astype(np.int64)

    def records(self) -> list[dict]:
        rows = []
        cls = self.classification if (self.slope is not None or self.labels is not None) else None
        for i, mu in enumerate(self.mu_values):
            for j, alpha in enumerate(self.alpha_values):
                row = {
                    "mu": float(mu),
                    "alpha": float(alpha),
                    "stat": float(self.stat[i, j]),
                    "n_missing": int(self.n_missing[i, j]) if self.n_missing is not None else 0,
                }
                if self.slope is not None:
                    row["slope"] = float(self.slope[i, j])
                if cls is not None:
                    row["grows"] = int(cls[i, j])
                rows.append(row)
        return rows


def log_grid(lo: float, hi: float, n: int) -> np.ndarray:
    return np.logspace(math.log10(lo), math.log10(hi), n)


def phase_grid(
    gamma: float,
    mu_values: Sequence[float],
    alpha_values: Sequence[float],
    t_final: int = 1000,
    realizations: int = DEFAULT_REALIZATIONS,
    which: str = "poorest",
    *,
    n_agents: int = 2500,
    seed: int = 0,
    fraction: float = 0.01,
    slope_points: int = 21,
    threads: int = 1,
) -> PhaseGrid:
    """Percentile-mean wealth at ``t_final`` for every (mu, alpha) cell.

    A realization that hits a degenerate state (or whose percentile mean
    underflows to zero) is dropped and counted in ``n_missing``; a cell with
    no usable realization gets NaN.
    """
    mu_values = np.asarray(mu_values, dtype=np.float64)
    alpha_values = np.asarray(alpha_values, dtype=np.float64)
    if mu_values.size == 0 or alpha_values.size == 0:
        raise ValueError("mu_values and alpha_values must be non-empty")
    if t_final < 1:
        raise ValueError("t_final must be >= 1")
    if which not in ("poorest", "richest"):
        raise ValueError("which must be 'poorest' or 'richest'")
    half = t_final // 2
    sample_times = np.unique(np.linspace(half, t_final, slope_points).round().astype(np.int64))
    sample_times = sample_times[sample_times >= 1]

    # validate every cell up front so bad values fail as configuration errors
    for mu in mu_values:
        for alpha in alpha_values:
            ModelParams(gamma, float(mu), float(alpha), n_agents, seed)

    def task(args):
        mu, alpha, q = args
        p = ModelParams(gamma, mu, alpha, n_agents, seed)
        state = init_state(p)
        rng = PhiloxStream(seed, value_bits(mu), value_bits(alpha), q)
        vals = np.empty(sample_times.size)
        try:
            for k, t in enumerate(sample_times):
                advance(state, p, rng, int(t) - state.time)
                vals[k] = percentile_mean(rank_snapshot(state), which, fraction)
        except DegenerateStateError:
            return None
        return vals

    tasks = [
        (float(mu), float(alpha), q)
        for mu in mu_values
        for alpha in alpha_values
        for q in range(realizations)
    ]
    results = ordered_map(task, tasks, threads)

    shape = (mu_values.size, alpha_values.size)
    stat = np.full(shape, np.nan)
    slope = np.full(shape, np.nan)
    n_missing = np.zeros(shape, dtype=np.int64)
    for i, mu in enumerate(mu_values):
        for j in range(alpha_values.size):
            start = (i * alpha_values.size + j) * realizations
            cell = results[start:start + realizations]
            ok = [v for v in cell if v is not None and np.all(np.isfinite(v)) and np.all(v > 0)]
            n_missing[i, j] = realizations - len(ok)
            if not ok:
                continue
            mean = np.mean(ok, axis=0)
            stat[i, j] = math.log(mean[-1])
            y = np.log(mean) + sample_times * math.log1p(mu)
            if sample_times.size >= 2:
                slope[i, j] = np.polyfit(sample_times.astype(np.float64), y, 1)[0]
    return PhaseGrid(
        gamma=float(gamma),
        mu_values=mu_values,
        alpha_values=alpha_values,
        stat=stat,
        t_final=int(t_final),
        realizations=int(realizations),
        which=which,
        fraction=fraction,
        slope=slope,
        n_missing=n_missing,
        n_agents=n_agents,
    )


@dataclass
class BoundaryFit:
    """Fit of the growth/decay boundary ``mu = k * alpha**2``."""

    k: float
    classification_grid: np.ndarray
    fit_quality: float
    boundary_mu: np.ndarray = field(default_factory=lambda: np.empty(0))
    boundary_alpha: np.ndarray = field(default_factory=lambda: np.empty(0))
    method: str = "slope"


def _column_threshold(labels: np.ndarray) -> int | None:
    """Index ``i`` such that cells ``< i`` decay and ``>= i`` grow, chosen to
    minimize misclassification. None if the column has no boundary."""
    valid = labels != 0
    lab = labels[valid]
    if lab.size < 2 or np.all(lab > 0) or np.all(lab < 0):
        return None
    best, best_err = None, None
    idx = np.flatnonzero(valid)
    for cut in range(1, lab.size):
        err = np.sum(lab[:cut] > 0) + np.sum(lab[cut:] < 0)
        if best_err is None or err < best_err:
            best, best_err = cut, err
    return int(idx[best])


def _boundary_adjacent(labels: np.ndarray) -> np.ndarray:
    """Cells with a nearest neighbour of the opposite class."""
    adj = np.zeros(labels.shape, dtype=bool)
    a, b = labels[:-1, :], labels[1:, :]
    flip = (a * b) < 0
    adj[:-1, :] |= flip
    adj[1:, :] |= flip
    a, b = labels[:, :-1], labels[:, 1:]
    flip = (a * b) < 0
    adj[:, :-1] |= flip
    adj[:, 1:] |= flip
    return adj


def _agreement(labels, mu, alpha, k, mask):
    pred = np.where(mu[:, None] > k * alpha[None, :] ** 2, 1, -1)
    sel = mask & (labels != 0)
    return float(np.mean(pred[sel] == labels[sel])) if sel.any() else float("nan")


def fit_boundary(grid: PhaseGrid) -> BoundaryFit:
    """Fit ``k`` in ``mu = k * alpha**2`` to the growth/decay boundary.

    With slopes available, each alpha column contributes the zero crossing
    of the slope, interpolated linearly in mu between the two cells that
    straddle the boundary, and ``k`` is the least-squares fit through the
    origin in linear units. With labels only, ``k`` minimizes the squared
    label error ``sum (label - sign(mu - k alpha^2))^2`` over cells adjacent
    to the boundary, taking the log-midpoint of the optimal interval.
    ``fit_quality`` is the fraction of classified cells that the fitted
    boundary puts on the right side.
    """
    labels = grid.classification
    mu = np.asarray(grid.mu_values, dtype=np.float64)
    alpha = np.asarray(grid.alpha_values, dtype=np.float64)
    if labels.shape != (mu.size, alpha.size):
        raise ValueError("classification shape does not match the grid axes")
    use_slopes = grid.labels is None and grid.slope is not None

    b_mu, b_alpha = [], []
    for j in range(alpha.size):
        cut = _column_threshold(labels[:, j])
        if cut is None:
            continue
        valid = np.flatnonzero(labels[:, j] != 0)
        lo = valid[valid < cut].max()
        hi = cut
        if use_slopes:
            s_lo, s_hi = grid.slope[lo, j], grid.slope[hi, j]
            frac = -s_lo / (s_hi - s_lo) if s_hi != s_lo else 0.5
            b_mu.append(mu[lo] + frac * (mu[hi] - mu[lo]))
        else:
            b_mu.append(math.sqrt(mu[lo] * mu[hi]))
        b_alpha.append(alpha[j])
    b_mu = np.asarray(b_mu)
    b_alpha = np.asarray(b_alpha)
    if b_mu.size < 3:
        raise InsufficientDataError(
            f"only {b_mu.size} boundary points found; need at least 3 to fit mu = k alpha^2"
        )

    everything = np.ones(labels.shape, dtype=bool)
    if use_slopes:
        k = float(np.sum(b_mu * b_alpha**2) / np.sum(b_alpha**4))
        method = "slope"
    else:
        adj = _boundary_adjacent(labels)
        ratio = mu[:, None] / alpha[None, :] ** 2
        cuts = np.unique(np.log(ratio[adj]))
        cands = np.concatenate(([cuts[0] - 1.0], (cuts[:-1] + cuts[1:]) / 2, [cuts[-1] + 1.0]))
        scores = np.array([_agreement(labels, mu, alpha, math.exp(c), adj) for c in cands])
        best = np.flatnonzero(scores == scores.max())
        # midpoint of the best contiguous run closest to the median candidate
        runs, run = [], [best[0]]
        for b in best[1:]:
            if b == run[-1] + 1:
                run.append(b)
            else:
                runs.append(run)
                run = [b]
        runs.append(run)
        run = max(runs, key=len)
        lo_c = cuts[run[0] - 1] if run[0] > 0 else cands[run[0]]
        hi_c = cuts[run[-1]] if run[-1] < cuts.size else cands[run[-1]]
        k = math.exp(0.5 * (lo_c + hi_c))
        method = "labels"
    quality = _agreement(labels, mu, alpha, k, everything)
    return BoundaryFit(k, labels, quality, b_mu, b_alpha, method)


# ---------------------------------------------------------------------------
# finite size, mobility, ergodicity, transients

@dataclass(frozen=True)
class FiniteSizePoint:
    n_agents: int
    ws_max: float
    sem: float


def finite_size_scan(
    gamma: float,
    template: ModelParams,
    n_values: Sequence[int],
    t_final: int,
    realizations: int = DEFAULT_REALIZATIONS,
    *,
    threads: int = 1,
) -> list[FiniteSizePoint]:
    """Realization-mean ``ws_max`` at ``t_final`` for each population size."""
    n_values = [int(n) for n in n_values]
    if any(b <= a for a, b in zip(n_values, n_values[1:])):
        raise ValueError("n_values must be strictly increasing")
    params = [
        ModelParams(gamma, template.mu, template.alpha, n, template.seed) for n in n_values
    ]

    def task(args):
        p, q = args
        state = init_state(p)
        advance(state, p, PhiloxStream(p.seed, p.n_agents, q), t_final)
        return float(state.wealth.max() / state.wealth.sum())

    tasks = [(p, q) for p in params for q in range(realizations)]
    vals = np.asarray(ordered_map(task, tasks, threads)).reshape(len(params), realizations)
    sem = vals.std(axis=1, ddof=1) / math.sqrt(realizations) if realizations > 1 else np.zeros(len(params))
    return [FiniteSizePoint(n, float(v), float(e)) for n, v, e in zip(n_values, vals.mean(axis=1), sem)]


def loglog_slope(x, y) -> float:
    return float(np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)[0])


@dataclass
class MobilitySeries:
    times: np.ndarray
    lags: np.ndarray
    corr: np.ndarray
    reference_time: int

    def records(self):
        return [
            {"t": int(t), "lag": int(l), "C": float(c)}
            for t, l, c in zip(self.times, self.lags, self.corr)
        ]


def mobility_series(
    params: ModelParams,
    t_max: int,
    record_every: int = 10,
    realizations: int = 1,
    *,
    reference_time: int = MOBILITY_REFERENCE_TIME,
    threads: int = 1,
) -> MobilitySeries:
    """Rank correlation ``C`` between each recorded time and the reference.

    Only records at or after ``reference_time`` are returned; ``lag`` is the
    time since the reference.
    """
    if reference_time >= t_max:
        raise ValueError("reference_time must be earlier than t_max")
    times = uniform_schedule(t_max - reference_time, record_every) + reference_time
    times = np.concatenate(([reference_time], times))
    series = run_ensemble(
        params, t_max, record_every, realizations, threads=threads,
        record_times=times, reference_time=reference_time, keep_profiles=False,
    )
    return MobilitySeries(series.times, series.times - reference_time, series.corr, reference_time)


@dataclass
class ErgodicitySeries:
    times: np.ndarray
    omega: np.ndarray
    ratio: np.ndarray
    start_time: int

    def records(self):
        return [
            {"t": int(t), "omega": float(o), "omega_ratio": float(r)}
            for t, o, r in zip(self.times, self.omega, self.ratio)
        ]

    def linear_fit(self):
        """Slope, intercept and R^2 of ``ratio`` against ``t``."""
        ok = np.isfinite(self.ratio)
        t, r = self.times[ok].astype(np.float64), self.ratio[ok]
        slope, intercept = np.polyfit(t, r, 1)
        resid = r - (slope * t + intercept)
        r2 = 1.0 - np.sum(resid**2) / np.sum((r - r.mean()) ** 2)
        return float(slope), float(intercept), float(r2)


def ergodicity_series(
    params: ModelParams,
    t_max: int,
    record_every: int = 10,
    realizations: int = 1,
    *,
    metric_start: int | None = None,
    threads: int = 1,
    initial: WealthState | None = None,
) -> ErgodicitySeries:
    """Inverse wealth metric ``Omega(t0) / Omega(t)`` from the first epoch ``t0``."""
    series = run_ensemble(
        params, t_max, record_every, realizations, threads=threads,
        metric_start=metric_start, reference_time=None, keep_profiles=False, initial=initial,
    )
    ok = ~np.isnan(series.omega) | ~np.isnan(series.omega_ratio)
    start = int(series.times[ok][0]) if ok.any() else int(series.times[0])
    keep = series.times >= start
    return ErgodicitySeries(series.times[keep], series.omega[keep], series.omega_ratio[keep], start)


@dataclass
class TransientFit:
    gamma_values: np.ndarray
    t_ss_values: np.ndarray
    exponent: float
    fit_quality: float

    def records(self):
        return [{"gamma": float(g), "t_ss": float(t)} for g, t in zip(self.gamma_values, self.t_ss_values)]


def fit_transient(gamma_values, t_ss_values) -> TransientFit:
    """Slope ``x`` of ``ln t_ss`` against ``-ln(1 - gamma)`` and its R^2."""
    g = np.asarray(gamma_values, dtype=np.float64)
    t = np.asarray(t_ss_values, dtype=np.float64)
    if np.any(np.diff(g) <= 0) or np.any(g >= 1):
        raise ValueError("gamma_values must be strictly increasing and below 1")
    ok = np.isfinite(t) & (t > 0)
    if ok.sum() < 3:
        raise InsufficientDataError(f"{int(ok.sum())} usable steady-state times; need at least 3")
    x = -np.log1p(-g[ok])
    y = np.log(t[ok])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss if ss > 0 else 1.0
    return TransientFit(g, t, float(slope), float(r2))


def transient_times(
    gamma_values: Sequence[float],
    template: ModelParams,
    t_max: int,
    *,
    realizations: int = DEFAULT_REALIZATIONS,
    t_first: int = 100,
    per_octave: int = 4,
    sample_every: int | None = None,
    tol: float = COLLAPSE_TOL,
    exclude_bottom: float = COLLAPSE_EXCLUDE_BOTTOM,
    threads: int = 1,
) -> np.ndarray:
    """Collapse time for each gamma, NaN where none is found within ``t_max``.

    Each gamma is recorded on a doubling schedule so that ``(t, 2t)`` pairs
    exist at every scale.
    """
    gammas = np.asarray(gamma_values, dtype=np.float64)
    if np.any(gammas >= 1):
        raise ValueError("transient scaling needs gamma < 1")
    times = doubling_schedule(t_first, t_max, per_octave)
    t_ss = []
    for g in gammas:
        p = ModelParams(float(g), template.mu, template.alpha, template.n_agents, template.seed)
        series = run_ensemble(
            p, int(times[-1]), realizations=realizations, threads=threads,
            stream_prefix=(value_bits(g),), record_times=times, reference_time=None,
            sample_every=sample_every,
        )
        t_star = detect_collapse(series, tol, exclude_bottom)
        t_ss.append(np.nan if t_star is None else float(t_star))
    return np.asarray(t_ss)


def transient_scaling(gamma_values: Sequence[float], template: ModelParams, t_max: int, **kwargs) -> TransientFit:
    """Collapse times for each gamma and the fitted divergence exponent.

    Keyword arguments are those of :func:`transient_times`.
    """
    return fit_transient(gamma_values, transient_times(gamma_values, template, t_max, **kwargs))
