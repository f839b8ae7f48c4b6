"""Command-line entry point: ``pgmfilter run|demo|bound|replay``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from ..errors import ConfigError, PGMError
from ..metrics import chi2_upper_bound
from ..models import Trajectory
from .campaign import replay, run_campaign
from .config import load_config, shipped_config
from .demos import demo_bimodal, demo_particle_depletion
from .outputs import emit_outputs


def _resolve_config(path: str):
    p = Path(path)
    if not p.exists() and p.suffix in ("", ".toml") and "/" not in path:
        try:
            p = shipped_config(p.stem)
        except ConfigError:
            pass
    return load_config(p)


def _apply_overrides(cfg, args):
    cfg = cfg.with_overrides(runs=args.runs_override, seed=args.seed, output_dir=args.out)
    if getattr(args, "workers", None):
        from dataclasses import replace

        cfg = replace(cfg, workers=args.workers)
    return cfg


def _print_summary(result, quiet: bool) -> None:
    if quiet:
        return
    print(f"{'filter':<10} {'E_rms_bar':>12} {'beta_c_pct':>11} {'L_hat':>12} {'V2sigma_hat':>14} {'sw_c_pct':>9} {'failed':>7}")
    for name in result.filter_names:
        s = result.summaries[name]
        print(
            f"{name:<10} {s.E_rms_bar:>12.4f} {s.beta_c_pct:>11.2f} {s.L_hat:>12.4g} "
            f"{s.V2sigma_hat:>14.4g} {s.sw_c_pct:>9.2f} {s.n_failed:>7d}"
        )


def cmd_run(args) -> int:
    cfg = _apply_overrides(_resolve_config(args.config), args)
    progress = None
    if not args.quiet:
        def progress(i, n):
            print(f"run {i}/{n}", file=sys.stderr)
    result = run_campaign(cfg, progress)
    emit_outputs(result, cfg.output_dir)
    _print_summary(result, args.quiet)
    if not args.quiet:
        print(f"outputs written to {cfg.output_dir}")
    return 0


def cmd_replay(args) -> int:
    cfg = _apply_overrides(_resolve_config(args.config), args)
    try:
        truth = Trajectory.from_csv(args.truth)
    except (OSError, ValueError, IndexError) as exc:
        print(f"error: cannot read truth stream {args.truth}: {exc}", file=sys.stderr)
        return 2
    model = cfg.build_model()
    if truth.states.shape[1] != model.dim or truth.measurements.shape[1] != model.meas_dim:
        print(
            f"error: {args.truth} has state/measurement dims {truth.states.shape[1]}/{truth.measurements.shape[1]}, "
            f"config model expects {model.dim}/{model.meas_dim}",
            file=sys.stderr,
        )
        return 2
    result = replay(cfg, truth)
    emit_outputs(result, cfg.output_dir)
    _print_summary(result, args.quiet)
    return 0


def cmd_bound(args) -> int:
    print(f"{chi2_upper_bound(args.dim, args.runs, args.level):.4f}")
    return 0


def cmd_demo(args) -> int:
    seed = 0 if args.seed is None else args.seed
    out = args.out
    if args.which == "depletion":
        res = demo_particle_depletion(seed=seed, out_dir=out)
        if not args.quiet:
            print(f"particles: {res.particles.shape[0]}")
            print(f"max normalized weight: {res.max_weight:.4f}")
            print(f"effective sample size: {res.n_eff:.3f}")
            for v, n in zip(res.sweep_vars, res.sweep_n_eff):
                print(f"  prior variance {v:>6.2f}: N_eff = {n:.3f}")
    else:
        a, b = demo_bimodal(seed0=seed, out_dir=out)
        if not args.quiet:
            print(f"demo system: M*=2 in {a.fraction_two * 100:.0f}% of {a.seeds} seeds")
            print(f"scalar growth model: M*=2 in {b.fraction_two * 100:.0f}% of {b.seeds} seeds")
    if out and not args.quiet:
        print(f"figure written to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="master seed (overrides the config)")
    common.add_argument("--out", default=None, help="output directory (overrides the config)")
    common.add_argument("--runs-override", type=int, default=None, help="number of Monte Carlo runs")
    common.add_argument("--workers", type=int, default=None, help="parallel worker processes")
    common.add_argument("--quiet", action="store_true", help="suppress progress and summary output")

    p = argparse.ArgumentParser(prog="pgmfilter", description="Particle Gaussian mixture filtering experiments")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", parents=[common], help="run a Monte Carlo campaign")
    r.add_argument("config", help="TOML config file, or a shipped name (example1, example2, example3)")
    r.set_defaults(func=cmd_run)

    d = sub.add_parser("demo", parents=[common], help="illustrative demos")
    d.add_argument("which", choices=("depletion", "bimodal"))
    d.set_defaults(func=cmd_demo)

    b = sub.add_parser("bound", help="print the chi-square NEES bound")
    b.add_argument("--dim", type=int, required=True)
    b.add_argument("--runs", type=int, required=True)
    b.add_argument("--level", type=float, default=0.99)
    b.set_defaults(func=cmd_bound)

    rp = sub.add_parser("replay", parents=[common], help="re-filter a recorded truth/measurement stream")
    rp.add_argument("truth", help="truth CSV written by a previous run")
    rp.add_argument("config")
    rp.set_defaults(func=cmd_replay)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.ERROR if getattr(args, "quiet", False) else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (PGMError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
