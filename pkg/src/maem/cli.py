"""Command-line entry point: ``maem <experiment> --config FILE [options]``.

Exit status is 0 on success, 2 on a configuration error and 3 on a runtime
error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from maem import experiments as ex
from maem import grw
from maem.config import KINDS, RunConfig, parse_config
from maem.errors import ConfigError, InsufficientDataError, MaemError
from maem.io import write_results

log = logging.getLogger("maem")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


class ExperimentFailed(MaemError):
    """The experiment ran but its analysis step failed; results were still written."""


def _trajectory(cfg: RunConfig, threads):
    p = cfg.model_params()
    ref = cfg.reference_time
    if ref is not None and ref > cfg.t_max:
        ref = None
    series = ex.run_ensemble(
        p, cfg.t_max, cfg.record_every, cfg.realizations, threads=threads,
        reference_time=ref, sample_every=cfg.sample_every, fraction=cfg.fraction,
    )
    summary = {"realizations": cfg.realizations}
    if len(series) >= 4:
        t_star = ex.detect_collapse(series, cfg.collapse_tol, cfg.exclude_bottom)
        summary["collapse_time"] = t_star
        summary["collapse_distances"] = {t: d for t, d in ex.collapse_distances(series, cfg.exclude_bottom)}
    summary["final_ws_max"] = float(series.ws_max[-1])
    return series.records(), summary, None


def _phase_grid(cfg: RunConfig, threads):
    grid = ex.phase_grid(
        cfg.gamma, cfg.mu_values(), cfg.alpha_values(), cfg.t_final, cfg.realizations, cfg.which,
        n_agents=cfg.n_agents, seed=cfg.seed, fraction=cfg.fraction, threads=threads,
    )
    summary = {"missing_cells": int(np.sum(grid.n_missing == grid.realizations))}
    failure = None
    if cfg.fit_boundary:
        try:
            fit = ex.fit_boundary(grid)
            summary.update(k=fit.k, fit_quality=fit.fit_quality, boundary_points=int(fit.boundary_mu.size))
        except InsufficientDataError as exc:
            summary["fit_error"] = str(exc)
            failure = exc
    return grid.records(), summary, failure


def _finite_size(cfg: RunConfig, threads):
    pts = ex.finite_size_scan(
        cfg.gamma, cfg.model_params(), cfg.n_values, cfg.t_final, cfg.realizations, threads=threads
    )
    rows = [{"N": q.n_agents, "ws_max": q.ws_max, "sem": q.sem} for q in pts]
    summary = {}
    if len(pts) >= 2:
        summary["loglog_slope"] = ex.loglog_slope([q.n_agents for q in pts], [q.ws_max for q in pts])
    return rows, summary, None


def _mobility(cfg: RunConfig, threads):
    m = ex.mobility_series(
        cfg.model_params(), cfg.t_max, cfg.record_every, cfg.realizations,
        reference_time=cfg.reference_time, threads=threads,
    )
    summary = {"reference_time": m.reference_time, "min_C": float(np.min(m.corr))}
    return m.records(), summary, None


def _ergodicity(cfg: RunConfig, threads):
    e = ex.ergodicity_series(
        cfg.model_params(), cfg.t_max, cfg.record_every, cfg.realizations,
        metric_start=cfg.metric_start, threads=threads,
    )
    summary = {"start_time": e.start_time, "final_ratio": float(e.ratio[-1])}
    if np.sum(np.isfinite(e.ratio)) >= 3:
        slope, intercept, r2 = e.linear_fit()
        summary.update(slope=slope, intercept=intercept, r_squared=r2)
    return e.records(), summary, None


def _transient(cfg: RunConfig, threads):
    t_ss = ex.transient_times(
        cfg.gamma_values, cfg.model_params(gamma=0.0), cfg.t_max,
        realizations=cfg.realizations, t_first=cfg.t_first, per_octave=cfg.per_octave,
        sample_every=cfg.sample_every, tol=cfg.collapse_tol, exclude_bottom=cfg.exclude_bottom,
        threads=threads,
    )
    rows = [{"gamma": g, "t_ss": t} for g, t in zip(cfg.gamma_values, t_ss)]
    failure = None
    try:
        fit = ex.fit_transient(cfg.gamma_values, t_ss)
        summary = {"exponent": fit.exponent, "fit_quality": fit.fit_quality}
    except InsufficientDataError as exc:
        summary = {"fit_error": str(exc)}
        failure = exc
    return rows, summary, failure


def _grw(cfg: RunConfig, threads):
    p = cfg.grw_params()
    ens = grw.simulate_ensemble(p, cfg.n_steps, threads=threads)
    summary = {
        "delta_g": p.delta,
        "classification": grw.classify_boundary(p),
        "median_slope": ens.median_slope(),
        "empirical": grw.empirical_direction(ens),
    }
    return ens.records(), summary, None


RUNNERS = {
    "trajectory": _trajectory,
    "phase-grid": _phase_grid,
    "finite-size": _finite_size,
    "mobility": _mobility,
    "ergodicity": _ergodicity,
    "transient": _transient,
    "grw": _grw,
}

HELP = {
    "trajectory": "rank profiles and observables over time; rescaled steady-state detection",
    "phase-grid": "late-time percentile wealth over a (mu, alpha) grid; optional boundary fit",
    "finite-size": "richest agent's rescaled wealth against population size",
    "mobility": "rank correlation against a reference time",
    "ergodicity": "inverse wealth metric Omega(t0)/Omega(t)",
    "transient": "collapse time against gamma and the divergence exponent",
    "grw": "geometric random walk ensemble and its boundary classification",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="maem", description="Modified asset exchange model experiments.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="experiment", required=True, metavar="experiment")
    for kind in KINDS:
        sp = sub.add_parser(kind, help=HELP[kind], description=HELP[kind])
        sp.add_argument("--config", type=Path, help="YAML key-value file (defaults apply to missing keys)")
        sp.add_argument("--out", help="output CSV path, '-' for stdout (default: config 'out' or <experiment>.csv)")
        sp.add_argument("--seed", type=int, help="master seed, overrides the config")
        sp.add_argument("--threads", type=int, default=1, help="worker threads (results do not depend on it)")
        sp.add_argument("--deterministic", action="store_true", help="omit the timestamp from the header")
    return parser


def load_config(args) -> RunConfig:
    text = ""
    if args.config is not None:
        try:
            text = args.config.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError("config", f"cannot read {args.config} ({exc.strerror or exc})") from None
    cfg = parse_config(text, args.experiment)
    if args.seed is not None:
        cfg = cfg.replace(seed=args.seed)
    if args.threads < 1:
        raise ConfigError("threads", "threads must be >= 1")
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        cfg = load_config(args)
    except ConfigError as exc:
        print(f"maem: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = args.out or cfg.out or f"{cfg.experiment}.csv"
    try:
        log.info("running %s with %d thread(s)", cfg.experiment, args.threads)
        rows, summary, failure = RUNNERS[cfg.experiment](cfg, args.threads)
        write_results(rows, out, cfg, summary, deterministic=args.deterministic)
        if failure is not None:
            raise ExperimentFailed(str(failure))
    except ConfigError as exc:
        print(f"maem: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (MaemError, ValueError, OSError) as exc:
        print(f"maem: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
