"""Experiment configuration files.

Configs are TOML documents with ``[experiment]``, ``[model]``, ``[prior]``,
optional ``[truth]`` and ``[output]`` sections and one ``[[filters]]``
table per filter.  Physical parameters have no defaults and must be given.
"""

from __future__ import annotations

import re
import sys
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from ..errors import ConfigError
from ..filters import FILTER_KINDS, RecursiveFilter, make_filter
from ..gaussmix import GaussianMixture
from ..models import (
    StateSpaceModel,
    demo_bimodal_model,
    linear_model,
    linear_oracle_model,
    lorenz63_model,
    lorenz96_model,
    scalar_benchmark_model,
)

MODEL_KEYS: dict[str, tuple[str, ...]] = {
    "scalar_benchmark": ("process_noise", "meas_noise", "meas_every"),
    "lorenz63": ("process_noise", "meas_noise", "dt", "meas_every", "noise_mode", "full_state_noise"),
    "lorenz96": ("dim", "forcing", "process_noise", "meas_noise", "dt", "meas_every", "noise_mode"),
    "linear": ("F", "H", "Q", "R", "meas_every"),
    "linear_oracle": (),
    "demo_bimodal": ("dt", "process_noise"),
}

FILTER_KEYS: dict[str, tuple[str, ...]] = {
    "pgm": ("particles", "m_max", "tol", "variant", "alpha", "beta", "lambda"),
    "sir": ("particles",),
    "enkf": ("particles",),
    "ukf": ("alpha", "beta", "lambda"),
    "gmukf": ("alpha", "beta", "lambda"),
}


@dataclass(frozen=True)
class FilterSpec:
    name: str
    kind: str
    settings: dict[str, Any]


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    steps: int
    runs: int
    seed: int
    model: dict[str, Any]
    prior: dict[str, Any]
    filters: tuple[FilterSpec, ...]
    metric_every: int = 1
    workers: int = 1
    truth_init: str = "prior"
    output_dir: str = "results"
    log_scale: bool = False
    plots: bool = True
    source: str | None = None

    def build_model(self) -> StateSpaceModel:
        return build_model(self.model)

    def build_prior(self) -> GaussianMixture:
        return build_prior(self.prior, self.build_model().dim)

    def build_filter(self, spec: FilterSpec, model: StateSpaceModel | None = None) -> RecursiveFilter:
        s = dict(spec.settings)
        if "lambda" in s:
            s["lam"] = s.pop("lambda")
        return make_filter(spec.kind, spec.name, model or self.build_model(), **s)

    def with_overrides(self, runs: int | None = None, seed: int | None = None, output_dir: str | None = None):
        return replace(
            self,
            runs=self.runs if runs is None else runs,
            seed=self.seed if seed is None else seed,
            output_dir=self.output_dir if output_dir is None else output_dir,
        )


def build_model(m: dict[str, Any]) -> StateSpaceModel:
    mid = m["id"]
    if mid == "scalar_benchmark":
        return scalar_benchmark_model(float(m["process_noise"]), float(m["meas_noise"]), int(m["meas_every"]))
    if mid == "lorenz63":
        return lorenz63_model(
            float(m["process_noise"]),
            float(m["meas_noise"]),
            float(m["dt"]),
            int(m["meas_every"]),
            m["noise_mode"],
            bool(m["full_state_noise"]),
            m.get("integrator", "euler"),
        )
    if mid == "lorenz96":
        return lorenz96_model(
            int(m["dim"]),
            float(m["forcing"]),
            float(m["process_noise"]),
            float(m["meas_noise"]),
            float(m["dt"]),
            int(m["meas_every"]),
            m["noise_mode"],
            m.get("integrator", "euler"),
        )
    if mid == "linear":
        return linear_model(m["F"], m["H"], np.asarray(m["Q"], float), np.asarray(m["R"], float), int(m["meas_every"]))
    if mid == "linear_oracle":
        return linear_oracle_model()
    if mid == "demo_bimodal":
        return demo_bimodal_model(float(m["dt"]), float(m["process_noise"]))
    raise ConfigError(f"unknown model id {mid!r}", field="model.id")


def build_prior(p: dict[str, Any], dim: int) -> GaussianMixture:
    weights = np.asarray(p["weights"], dtype=float)
    M = weights.shape[0]
    means = np.asarray(p["means"], dtype=float).reshape(M, dim)
    if "covs" in p:
        covs = np.asarray(p["covs"], dtype=float).reshape(M, dim, dim)
    elif "cov_scale" in p:
        covs = np.array([s * np.eye(dim) for s in p["cov_scale"]])
    else:
        covs = np.array([np.diag(np.broadcast_to(np.asarray(c, float), (dim,))) for c in p["cov_diag"]])
    return GaussianMixture(weights, means, covs)


def _line_of(text: str, section: str | None, key: str | None, occurrence: int = 0) -> int | None:
    lines = text.splitlines()
    start = 0
    if section is not None:
        pat = re.compile(r"^\s*\[+\s*" + re.escape(section) + r"\s*\]+")
        hits = [i for i, ln in enumerate(lines) if pat.match(ln)]
        if len(hits) <= occurrence:
            return None
        start = hits[occurrence]
        if key is None:
            return start + 1
    if key is None:
        return None
    kpat = re.compile(r"^\s*" + re.escape(key) + r"\s*=")
    for i in range(start, len(lines)):
        if i > start and section is not None and lines[i].lstrip().startswith("["):
            break
        if kpat.match(lines[i]):
            return i + 1
    return None


class _Reader:
    def __init__(self, text: str):
        self.text = text

    def error(self, msg: str, section: str | None, key: str | None = None, occurrence: int = 0) -> ConfigError:
        dotted = ".".join(x for x in (section, key) if x)
        return ConfigError(msg, field=dotted or None, line=_line_of(self.text, section, key, occurrence))

    def table(self, doc: dict, section: str) -> dict:
        if section not in doc:
            raise self.error(f"missing required section [{section}]", section)
        t = doc[section]
        if not isinstance(t, dict):
            raise self.error(f"[{section}] must be a table", section)
        return t

    def get(self, table: dict, section: str, key: str, kind, default=..., occurrence: int = 0):
        if key not in table:
            if default is ...:
                raise self.error(f"missing required key '{key}'", section, key, occurrence)
            return default
        value = table[key]
        if kind is float and isinstance(value, int) and not isinstance(value, bool):
            value = float(value)
        if not isinstance(value, kind) or (kind is int and isinstance(value, bool)):
            name = kind.__name__ if isinstance(kind, type) else "/".join(k.__name__ for k in kind)
            raise self.error(f"expected {name}, got {type(value).__name__}", section, key, occurrence)
        return value


def parse_config(text: str, source: str | None = None) -> ExperimentConfig:
    """Parse and validate a TOML experiment configuration."""
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ConfigError(f"invalid TOML: {exc}", line=int(m.group(1)) if m else None) from exc
    r = _Reader(text)

    exp = r.table(doc, "experiment")
    name = r.get(exp, "experiment", "name", str)
    steps = r.get(exp, "experiment", "steps", int)
    runs = r.get(exp, "experiment", "runs", int)
    seed = r.get(exp, "experiment", "seed", int)
    metric_every = r.get(exp, "experiment", "metric_every", int, 1)
    workers = r.get(exp, "experiment", "workers", int, 1)
    for key, val, lo in (("steps", steps, 1), ("runs", runs, 1), ("metric_every", metric_every, 1), ("workers", workers, 1)):
        if val < lo:
            raise r.error(f"must be >= {lo}, got {val}", "experiment", key)

    model = dict(r.table(doc, "model"))
    mid = r.get(model, "model", "id", str)
    if mid not in MODEL_KEYS:
        raise r.error(f"unknown model id {mid!r}; expected one of {sorted(MODEL_KEYS)}", "model", "id")
    for key in MODEL_KEYS[mid]:
        if key not in model:
            raise r.error(f"missing required key '{key}' for model '{mid}'", "model", key)
    if "noise_mode" in model and model["noise_mode"] not in ("intensity", "per_step"):
        raise r.error("noise_mode must be 'intensity' or 'per_step'", "model", "noise_mode")
    if "integrator" in model and model["integrator"] not in ("euler", "rk4"):
        raise r.error("integrator must be 'euler' or 'rk4'", "model", "integrator")

    prior = dict(r.table(doc, "prior"))
    r.get(prior, "prior", "weights", list)
    r.get(prior, "prior", "means", list)
    if not any(k in prior for k in ("covs", "cov_scale", "cov_diag")):
        raise r.error("one of 'covs', 'cov_scale' or 'cov_diag' is required", "prior", "covs")

    truth = doc.get("truth", {})
    truth_init = r.get(truth, "truth", "init", str, "prior")
    if truth_init not in ("prior", "mean"):
        raise r.error("truth.init must be 'prior' or 'mean'", "truth", "init")

    raw_filters = doc.get("filters")
    if not raw_filters or not isinstance(raw_filters, list):
        raise r.error("at least one [[filters]] table is required", "filters")
    specs = []
    seen = set()
    for i, f in enumerate(raw_filters):
        sec = "filters"
        fname = r.get(f, sec, "name", str, occurrence=i)
        kind = r.get(f, sec, "kind", str, occurrence=i)
        if kind not in FILTER_KINDS:
            raise r.error(f"filter '{fname}': unknown kind {kind!r}; expected one of {FILTER_KINDS}", sec, "kind", i)
        if fname in seen:
            raise r.error(f"duplicate filter name {fname!r}", sec, "name", i)
        seen.add(fname)
        settings = {}
        for key in FILTER_KEYS[kind]:
            if key not in f:
                raise r.error(f"filter '{fname}' ({kind}) is missing '{key}'", sec, "name", i)
            settings[key] = f[key]
        specs.append(FilterSpec(fname, kind, settings))

    out = doc.get("output", {})
    cfg = ExperimentConfig(
        name=name,
        steps=steps,
        runs=runs,
        seed=seed,
        model=model,
        prior=prior,
        filters=tuple(specs),
        metric_every=metric_every,
        workers=workers,
        truth_init=truth_init,
        output_dir=r.get(out, "output", "dir", str, f"results/{name}"),
        log_scale=r.get(out, "output", "log_scale", bool, False),
        plots=r.get(out, "output", "plots", bool, True),
        source=source,
    )
    # build once so shape/definiteness problems surface as config errors
    try:
        model_obj = cfg.build_model()
    except ConfigError:
        raise
    except Exception as exc:
        raise r.error(f"cannot build model: {exc}", "model") from exc
    try:
        build_prior(prior, model_obj.dim)
    except Exception as exc:
        raise r.error(f"cannot build prior: {exc}", "prior") from exc
    for i, spec in enumerate(specs):
        try:
            cfg.build_filter(spec, model_obj)
        except Exception as exc:
            raise r.error(f"cannot build filter '{spec.name}': {exc}", "filters", "name", i) from exc
    return cfg


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, source=str(path))


def shipped_config(name: str) -> Path:
    """Path of a config bundled with the package (``example1`` .. ``example3``)."""
    path = Path(__file__).with_name("configs") / f"{name}.toml"
    if not path.exists():
        raise ConfigError(f"no shipped config named {name!r}")
    return path
