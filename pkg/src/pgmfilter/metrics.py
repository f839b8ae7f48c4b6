"""Accuracy, consistency and informativeness metrics for Monte Carlo runs.

Conventions: arrays of truths/estimates are indexed ``[run, time, state]``.
A posterior is either a :class:`GaussianMixture` or an ``(N, d)`` ensemble;
ensembles are summarized by the Gaussian with their sample mean and
covariance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np
from scipy.optimize import brentq
from scipy.special import gammainc

from .errors import CholeskyFailure, InvalidArgument
from .gaussmix import GaussianMixture, cholesky, gaussian_logpdf, symmetrize

# two-sided 99% standard normal bound used for the weight-consistency statistic
SW_BOUND_99 = 2.5758293035489004


@dataclass
class MetricRecord:
    """Metric values for one (filter, run, evaluation step)."""

    filter: str
    run_index: int
    step: int
    rmse_sq_contrib: float
    beta: float
    sw_eps2: float | None
    sw_mean: float | None
    sw_var: float | None
    likelihood: float
    log_likelihood: float
    v2sigma: float
    chosen_M: int
    n_modes: int
    degenerate: bool = False

    @classmethod
    def columns(cls) -> list[str]:
        return [f.name for f in fields(cls)]


def _ridge_fit(X: np.ndarray) -> tuple[np.ndarray, np.ndarray, bool]:
    """Sample mean/cov of an ensemble; singular covariances get a ridge and a flag."""
    X = np.asarray(X, dtype=float)
    n, d = X.shape
    mu = X.mean(axis=0)
    P = symmetrize(np.atleast_2d(np.cov(X, rowvar=False))) if n > 1 else np.zeros((d, d))
    try:
        cholesky(P)
        return mu, P, False
    except CholeskyFailure:
        eps = max(1e-12, 1e-9 * np.trace(P) / d)
        while True:
            R = P + eps * np.eye(d)
            try:
                cholesky(R)
                return mu, R, True
            except CholeskyFailure:
                eps *= 10.0


def gaussian_summary(posterior) -> tuple[GaussianMixture, bool]:
    """Mixture view of a posterior; ensembles become a single Gaussian.

    Returns ``(gmm, degenerate)`` where ``degenerate`` flags a repaired
    singular ensemble covariance.
    """
    if isinstance(posterior, GaussianMixture):
        return posterior, False
    mu, P, bad = _ridge_fit(posterior)
    return GaussianMixture.single(mu, P), bad


def point_estimate(posterior) -> np.ndarray:
    if isinstance(posterior, GaussianMixture):
        return posterior.mean()
    return np.asarray(posterior, dtype=float).mean(axis=0)


def rmse_series(truths, estimates) -> tuple[np.ndarray, float]:
    """Monte Carlo RMSE per time step and its time average.

    Squared error norms are averaged over runs before the square root; the
    time average is taken over the rooted series.
    """
    X = np.asarray(truths, dtype=float)
    M = np.asarray(estimates, dtype=float)
    if X.shape != M.shape:
        raise InvalidArgument(f"truths {X.shape} and estimates {M.shape} are not aligned")
    if X.ndim == 2:
        X, M = X[..., None], M[..., None]
    sq = np.sum((X - M) ** 2, axis=-1)
    series = np.sqrt(sq.mean(axis=0))
    return series, float(series.mean())


def nees(x_true, mean, cov) -> float:
    """``(x - mu)^T P^{-1} (x - mu)``."""
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    d = mean.shape[0]
    e = np.asarray(x_true, dtype=float).reshape(d) - mean
    L = cholesky(np.asarray(cov, dtype=float).reshape(d, d))
    y = np.linalg.solve(L, e)
    return float(y @ y)


def most_likely_mode(gmm: GaussianMixture, x_true) -> int:
    """Index of the component whose (unweighted) density at ``x_true`` is largest."""
    lp = [gaussian_logpdf(x_true, gmm.means[i], gmm.covs[i]) for i in range(gmm.n_components)]
    return int(np.argmax(lp))


def nees_mixture(x_true, gmm: GaussianMixture) -> float:
    """NEES about the most likely mode of a mixture."""
    i = most_likely_mode(gmm, x_true)
    return nees(x_true, gmm.means[i], gmm.covs[i])


def chi2_cdf(x: float, dof: float) -> float:
    """Chi-square CDF as the regularized lower incomplete gamma ``P(dof/2, x/2)``."""
    if x <= 0:
        return 0.0
    return float(gammainc(0.5 * dof, 0.5 * x))


def chi2_quantile(level: float, dof: float) -> float:
    """Invert :func:`chi2_cdf` by bracketing and Brent's method."""
    if not 0.0 < level < 1.0:
        raise InvalidArgument(f"level must lie in (0, 1), got {level}")
    if dof <= 0:
        raise InvalidArgument(f"degrees of freedom must be positive, got {dof}")
    hi = dof + 10.0 * math.sqrt(2.0 * dof) + 10.0
    while chi2_cdf(hi, dof) < level:
        hi *= 2.0
    return float(brentq(lambda x: chi2_cdf(x, dof) - level, 0.0, hi, xtol=1e-12, rtol=1e-14, maxiter=500))


def chi2_upper_bound(d: int, n_runs: int, level: float = 0.99) -> float:
    """Upper bound on the run-averaged NEES: ``quantile(chi2_{d n}, level) / n``."""
    if d < 1 or n_runs < 1:
        raise InvalidArgument(f"need d >= 1 and n_runs >= 1, got d={d}, n_runs={n_runs}")
    return chi2_quantile(level, d * n_runs) / n_runs


def weight_consistency_terms(weights, indicator) -> tuple[float, float, float]:
    """Squared weight error and its mean and variance under the mixture weights.

    ``eps2 = ||indicator - w||^2``,
    ``E = sum_i w_i (1 - w_i)`` and
    ``Var = sum_i w_i (1 - w_i) ((1 - w_i)^3 + w_i^3)
    + sum_k sum_{j != k} w_j w_k (w_j + w_k - 3 w_j w_k) - E^2``.
    """
    w = np.asarray(weights, dtype=float)
    v = np.asarray(indicator, dtype=float)
    if w.shape != v.shape:
        raise InvalidArgument(f"weights {w.shape} and indicator {v.shape} differ in shape")
    eps2 = float(np.sum((v - w) ** 2))
    mean = float(np.sum(w * (1.0 - w)))
    diag = np.sum(w * (1.0 - w) * ((1.0 - w) ** 3 + w**3))
    pair = w[:, None] * w[None, :] * (w[:, None] + w[None, :] - 3.0 * w[:, None] * w[None, :])
    np.fill_diagonal(pair, 0.0)
    var = float(diag + pair.sum() - mean**2)
    return eps2, mean, max(var, 0.0)


def mode_indicator(gmm: GaussianMixture, x_true) -> np.ndarray:
    v = np.zeros(gmm.n_components)
    v[most_likely_mode(gmm, x_true)] = 1.0
    return v


def sw_statistic(terms, var_floor: float = 1e-15) -> tuple[float | None, int]:
    """Standardized sum of weight errors over runs.

    ``terms`` holds ``(eps2, mean, var)`` per run, or None where the run had
    no mixture.  Runs whose variance is undefined (<= ``var_floor``) are
    excluded.  Returns ``(Sw or None, n_excluded)``.
    """
    usable = [t for t in terms if t is not None and t[2] > var_floor]
    excluded = len(terms) - len(usable)
    if not usable:
        return None, excluded
    n = len(usable)
    total = sum((e - m) / math.sqrt(n * v) for e, m, v in usable)
    return float(total), excluded


def likelihood_metric(posterior, x_true) -> tuple[float, bool]:
    """Posterior density at the truth; ensembles use their Gaussian fit.

    Returns ``(value, degenerate)``.
    """
    gmm, bad = gaussian_summary(posterior)
    return float(gmm.pdf(np.asarray(x_true, dtype=float).reshape(gmm.dim))), bad


def log_likelihood_metric(posterior, x_true) -> tuple[float, bool]:
    gmm, bad = gaussian_summary(posterior)
    return float(gmm.logpdf(np.asarray(x_true, dtype=float).reshape(gmm.dim))), bad


def v2sigma(posterior) -> float:
    """Sum over modes of ``det(2 P_i)`` (unweighted)."""
    gmm, _ = gaussian_summary(posterior)
    return float(sum(np.linalg.det(2.0 * gmm.covs[i]) for i in range(gmm.n_components)))


def log_v2sigma(posterior) -> float:
    """Log of :func:`v2sigma`, stable in high dimension."""
    gmm, _ = gaussian_summary(posterior)
    d = gmm.dim
    logs = [d * math.log(2.0) + np.linalg.slogdet(gmm.covs[i])[1] for i in range(gmm.n_components)]
    top = max(logs)
    return float(top + math.log(sum(math.exp(v - top) for v in logs)))


def consistency_fraction(beta_series, bound: float) -> float:
    """Fraction of time steps with run-averaged NEES strictly below ``bound``."""
    b = np.asarray(beta_series, dtype=float)
    if b.size == 0:
        return float("nan")
    return float(np.mean(b < bound))


def evaluate(filter_name: str, run_index: int, step: int, posterior, x_true, chosen_M: int = 0) -> MetricRecord:
    """All per-run metrics of one posterior against the truth."""
    gmm, bad = gaussian_summary(posterior)
    x = np.asarray(x_true, dtype=float).reshape(gmm.dim)
    est = point_estimate(posterior)
    beta = nees_mixture(x, gmm)
    if gmm.n_components > 1:
        eps2, mean, var = weight_consistency_terms(gmm.weights, mode_indicator(gmm, x))
    else:
        eps2 = mean = var = None
    logL = float(gmm.logpdf(x))
    return MetricRecord(
        filter=filter_name,
        run_index=run_index,
        step=step,
        rmse_sq_contrib=float(np.sum((x - est) ** 2)),
        beta=beta,
        sw_eps2=eps2,
        sw_mean=mean,
        sw_var=var,
        likelihood=math.exp(logL) if logL < 700 else math.inf,
        log_likelihood=logL,
        v2sigma=v2sigma(gmm),
        chosen_M=chosen_M or gmm.n_components,
        n_modes=gmm.n_components,
        degenerate=bad,
    )
