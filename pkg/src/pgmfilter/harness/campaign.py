"""Monte Carlo campaigns: truth generation, filtering and metric aggregation."""

from __future__ import annotations

import logging
import math
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .. import metrics
from ..errors import PGMError
from ..gaussmix import GaussianMixture, sample_mixture
from ..models import Trajectory, simulate_truth
from .config import ExperimentConfig

log = logging.getLogger(__name__)


def child_rng(master_seed: int, run_index: int, role: str) -> np.random.Generator:
    """Independent generator for one (run, stream role) pair.

    Roles are hashed by name, so reordering filters never changes a stream.
    """
    role_id = zlib.crc32(role.encode("utf-8"))
    return np.random.default_rng(np.random.SeedSequence(entropy=master_seed, spawn_key=(run_index, role_id)))


@dataclass
class FilterRun:
    """One filter on one Monte Carlo run."""

    filter: str
    run_index: int
    records: list[metrics.MetricRecord] = field(default_factory=list)
    failed: bool = False
    error: str = ""
    flags: dict[str, int] = field(default_factory=dict)
    final_posterior: GaussianMixture | None = None


@dataclass
class RunResult:
    run_index: int
    truth: Trajectory
    filters: dict[str, FilterRun]


@dataclass
class FilterSummary:
    filter: str
    steps: np.ndarray
    n_ok: int
    n_failed: int
    erms: np.ndarray
    beta: np.ndarray
    sw: np.ndarray
    likelihood: np.ndarray
    log_likelihood: np.ndarray
    v2sigma: np.ndarray
    bound: float
    E_rms_bar: float
    beta_c_pct: float
    L_hat: float
    V2sigma_hat: float
    sw_c_pct: float

    def row(self) -> dict:
        return {
            "filter": self.filter,
            "E_rms_bar": self.E_rms_bar,
            "beta_c_pct": self.beta_c_pct,
            "L_hat": self.L_hat,
            "V2sigma_hat": self.V2sigma_hat,
            "sw_c_pct": self.sw_c_pct,
        }


@dataclass
class CampaignResult:
    config: ExperimentConfig
    runs: list[RunResult]
    summaries: dict[str, FilterSummary]

    @property
    def filter_names(self) -> list[str]:
        return [f.name for f in self.config.filters]

    def summary(self, name: str) -> FilterSummary:
        return self.summaries[name]


def make_truth(cfg: ExperimentConfig, run_index: int) -> Trajectory:
    model = cfg.build_model()
    prior = cfg.build_prior()
    if cfg.truth_init == "prior":
        x0 = sample_mixture(prior, 1, child_rng(cfg.seed, run_index, "truth-init"))[0]
    else:
        x0 = prior.mean()
    return simulate_truth(
        model,
        x0,
        cfg.steps,
        child_rng(cfg.seed, run_index, "truth-process"),
        child_rng(cfg.seed, run_index, "truth-measurement"),
    )


def run_filters(cfg: ExperimentConfig, run_index: int, truth: Trajectory) -> RunResult:
    """Run every configured filter over one shared truth/measurement stream."""
    model = cfg.build_model()
    prior = cfg.build_prior()
    out = {}
    for spec in cfg.filters:
        filt = cfg.build_filter(spec, model)
        fr = FilterRun(spec.name, run_index)
        try:
            filt.initialize(prior, child_rng(cfg.seed, run_index, "filter:" + spec.name))
            for k in range(truth.T):
                filt.advance(k, truth.z(k + 1))
                step = k + 1
                if step % cfg.metric_every:
                    continue
                post = filt.posterior()
                chosen = filt.last_info.get("chosen_M", 0) if truth.has_meas[step] else 0
                rec = metrics.evaluate(spec.name, run_index, step, post, truth.states[step], chosen)
                if not np.all(np.isfinite(metrics.point_estimate(post))) or not math.isfinite(rec.beta):
                    raise FloatingPointError(f"non-finite state at step {step}")
                fr.records.append(rec)
            post = filt.posterior()
            if isinstance(post, GaussianMixture):
                fr.final_posterior = post
        except (PGMError, np.linalg.LinAlgError, FloatingPointError, ValueError) as exc:
            fr.failed = True
            fr.error = f"{type(exc).__name__}: {exc}"
            log.warning("filter %s diverged on run %d: %s", spec.name, run_index, fr.error)
        fr.flags = {k: int(v) for k, v in filt.flags.items() if v}
        out[spec.name] = fr
    return RunResult(run_index, truth, out)


def run_single(cfg: ExperimentConfig, run_index: int) -> RunResult:
    return run_filters(cfg, run_index, make_truth(cfg, run_index))


def summarize(cfg: ExperimentConfig, runs: list[RunResult], name: str) -> FilterSummary:
    """Aggregate one filter over its successful runs."""
    model = cfg.build_model()
    ok = [r.filters[name] for r in runs if not r.filters[name].failed]
    n_failed = len(runs) - len(ok)
    steps = np.array([rec.step for rec in ok[0].records]) if ok else np.array([], dtype=int)
    n_t = steps.shape[0]
    if not ok or n_t == 0:
        nan = float("nan")
        empty = np.full(n_t, np.nan)
        return FilterSummary(name, steps, len(ok), n_failed, empty, empty, empty, empty, empty, empty, nan, nan, nan, nan, nan, nan)

    def grid(attr):
        return np.array([[getattr(rec, attr) for rec in fr.records] for fr in ok], dtype=float)

    erms = np.sqrt(grid("rmse_sq_contrib").mean(axis=0))
    beta = grid("beta").mean(axis=0)
    like = grid("likelihood").mean(axis=0)
    loglik = grid("log_likelihood")
    top = loglik.max(axis=0)
    log_like = top + np.log(np.mean(np.exp(loglik - top), axis=0))
    v2 = grid("v2sigma").mean(axis=0)
    sw = np.full(n_t, np.nan)
    for t in range(n_t):
        terms = []
        for fr in ok:
            rec = fr.records[t]
            terms.append(None if rec.sw_var is None else (rec.sw_eps2, rec.sw_mean, rec.sw_var))
        val, _ = metrics.sw_statistic(terms)
        if val is not None:
            sw[t] = val
    bound = metrics.chi2_upper_bound(model.dim, len(ok), 0.99)
    defined = np.isfinite(sw)
    sw_pct = 100.0 * float(np.mean(np.abs(sw[defined]) <= metrics.SW_BOUND_99)) if defined.any() else float("nan")
    return FilterSummary(
        filter=name,
        steps=steps,
        n_ok=len(ok),
        n_failed=n_failed,
        erms=erms,
        beta=beta,
        sw=sw,
        likelihood=like,
        log_likelihood=log_like,
        v2sigma=v2,
        bound=bound,
        E_rms_bar=float(erms.mean()),
        beta_c_pct=100.0 * metrics.consistency_fraction(beta, bound),
        L_hat=float(like.mean()),
        V2sigma_hat=float(v2.mean()),
        sw_c_pct=sw_pct,
    )


def run_campaign(cfg: ExperimentConfig, progress=None) -> CampaignResult:
    """Run ``cfg.runs`` Monte Carlo runs and aggregate per-filter metrics.

    Runs are independent; with ``cfg.workers > 1`` they execute in a process
    pool and are collected in run order, so results do not depend on the
    worker count.
    """
    indices = range(cfg.runs)
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            runs = list(pool.map(run_single, [cfg] * cfg.runs, indices))
    else:
        runs = []
        for i in indices:
            runs.append(run_single(cfg, i))
            if progress is not None:
                progress(i + 1, cfg.runs)
    return CampaignResult(cfg, runs, {spec.name: summarize(cfg, runs, spec.name) for spec in cfg.filters})


def replay(cfg: ExperimentConfig, truth: Trajectory) -> CampaignResult:
    """Filter a recorded truth/measurement stream as a one-run campaign."""
    run = run_filters(cfg, 0, truth)
    cfg1 = cfg.with_overrides(runs=1)
    return CampaignResult(cfg1, [run], {spec.name: summarize(cfg1, [run], spec.name) for spec in cfg.filters})
