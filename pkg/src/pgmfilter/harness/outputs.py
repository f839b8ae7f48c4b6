"""CSV, JSON and plot artifacts for a finished campaign.

Files written into the output directory:

``metrics.csv``   one row per (filter, run, evaluation step), every
                  :class:`~pgmfilter.metrics.MetricRecord` field
``summary.csv``   one row per filter: filter, E_rms_bar, beta_c_pct, L_hat,
                  V2sigma_hat, sw_c_pct
``series.csv``    aggregated time series per filter (E_rms, beta, bound, Sw,
                  L, log L, V2sigma) plus successful/failed run counts
``runs.csv``      per (filter, run): failure status and repair/degeneracy counters
``truth/run_XXX.csv``  truth and measurement stream of each run (replayable)
``posteriors/<filter>_run_XXX.json``  final mixture posterior snapshots
``erms.png``, ``nees.png``, ``likelihood.png``, ``v2sigma.png``

Floats are written with ``repr`` so identical results give identical bytes.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from ..metrics import MetricRecord  # noqa: E402
from .campaign import CampaignResult  # noqa: E402

SUMMARY_COLUMNS = ("filter", "E_rms_bar", "beta_c_pct", "L_hat", "V2sigma_hat", "sw_c_pct")
SERIES_COLUMNS = ("filter", "step", "time", "E_rms", "beta", "bound", "sw", "likelihood", "log_likelihood", "v2sigma", "n_ok", "n_failed")
RUNS_COLUMNS = ("filter", "run_index", "failed", "error", "flags")


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else ("nan" if math.isnan(v) else repr(v))
    return str(v)


def _write_csv(path: Path, header, rows) -> None:
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([_fmt(v) for v in row])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def write_metrics(result: CampaignResult, path: Path) -> None:
    cols = MetricRecord.columns()

    def rows():
        for run in result.runs:
            for name in result.filter_names:
                for rec in run.filters[name].records:
                    yield [getattr(rec, c) for c in cols]

    _write_csv(path, cols, rows())


def write_summary(result: CampaignResult, path: Path) -> None:
    rows = [[s.row()[c] for c in SUMMARY_COLUMNS] for s in (result.summaries[n] for n in result.filter_names)]
    _write_csv(path, SUMMARY_COLUMNS, rows)


def write_series(result: CampaignResult, path: Path) -> None:
    dt = result.runs[0].truth.dt if result.runs else 1.0

    def rows():
        for name in result.filter_names:
            s = result.summaries[name]
            for t, step in enumerate(s.steps):
                yield [
                    name, int(step), float(step * dt), float(s.erms[t]), float(s.beta[t]), float(s.bound),
                    float(s.sw[t]), float(s.likelihood[t]), float(s.log_likelihood[t]), float(s.v2sigma[t]),
                    s.n_ok, s.n_failed,
                ]

    _write_csv(path, SERIES_COLUMNS, rows())


def write_runs(result: CampaignResult, path: Path) -> None:
    def rows():
        for run in result.runs:
            for name in result.filter_names:
                fr = run.filters[name]
                flags = ";".join(f"{k}={v}" for k, v in sorted(fr.flags.items()))
                yield [name, run.run_index, fr.failed, fr.error, flags]

    _write_csv(path, RUNS_COLUMNS, rows())


def _plot(result: CampaignResult, path: Path, attr: str, ylabel: str, log_scale: bool = False, bound: bool = False) -> None:
    fig, ax = plt.subplots(figsize=(7, 4))
    dt = result.runs[0].truth.dt if result.runs else 1.0
    drawn = False
    for name in result.filter_names:
        s = result.summaries[name]
        if s.steps.size == 0:
            continue
        y = getattr(s, attr)
        if s.steps.size == 1:
            ax.plot(s.steps * dt, y, "o", label=name)
        else:
            ax.plot(s.steps * dt, y, label=name)
        drawn = True
    if bound:
        ub = next((s.bound for s in result.summaries.values() if math.isfinite(s.bound)), None)
        if ub is not None:
            ax.axhline(ub, color="k", linestyle="--", linewidth=1.0, label=f"Ub = {ub:.4f}")
            drawn = True
    if log_scale:
        ax.set_yscale("log")
    ax.set_xlabel("time")
    ax.set_ylabel(ylabel)
    ax.set_title(result.config.name)
    if drawn:
        ax.legend(fontsize="small")
    else:
        ax.text(0.5, 0.5, "no data", ha="center", va="center", transform=ax.transAxes)
    fig.tight_layout()
    try:
        fig.savefig(path, format="png", dpi=100, metadata={"Software": None})
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
    finally:
        plt.close(fig)


def write_plots(result: CampaignResult, out: Path, log_scale: bool = False) -> list[Path]:
    specs = [
        ("erms.png", "erms", "E_rms(t)", False, False),
        ("nees.png", "beta", "beta_t", log_scale, True),
        ("likelihood.png", "log_likelihood" if log_scale else "likelihood", "log L(t)" if log_scale else "L(t)", False, False),
        ("v2sigma.png", "v2sigma", "V_2sigma(t)", log_scale, False),
    ]
    paths = []
    for fname, attr, label, logy, bound in specs:
        p = out / fname
        _plot(result, p, attr, label, logy, bound)
        paths.append(p)
    return paths


def emit_outputs(result: CampaignResult, out_dir, plots: bool | None = None, log_scale: bool | None = None) -> list[Path]:
    """Write every artifact of ``result`` under ``out_dir``; returns the paths."""
    out = Path(out_dir)
    cfg = result.config
    plots = cfg.plots if plots is None else plots
    log_scale = cfg.log_scale if log_scale is None else log_scale
    try:
        (out / "truth").mkdir(parents=True, exist_ok=True)
        (out / "posteriors").mkdir(exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc.strerror or exc}") from exc
    written = [out / "metrics.csv", out / "summary.csv", out / "series.csv", out / "runs.csv"]
    write_metrics(result, written[0])
    write_summary(result, written[1])
    write_series(result, written[2])
    write_runs(result, written[3])
    for run in result.runs:
        p = out / "truth" / f"run_{run.run_index:03d}.csv"
        try:
            run.truth.to_csv(p)
        except OSError as exc:
            raise OSError(f"cannot write {p}: {exc.strerror or exc}") from exc
        written.append(p)
        for name in result.filter_names:
            post = run.filters[name].final_posterior
            if post is None:
                continue
            p = out / "posteriors" / f"{name}_run_{run.run_index:03d}.json"
            try:
                p.write_text(post.to_json())
            except OSError as exc:
                raise OSError(f"cannot write {p}: {exc.strerror or exc}") from exc
            written.append(p)
    if plots:
        written += write_plots(result, out, log_scale)
    return written
