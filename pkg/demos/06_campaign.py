"""
A Monte Carlo campaign through the harness
==========================================

Load the shipped scalar benchmark config, shrink it, run it and write the CSV
tables and plots. The same thing from a shell:

    pgmfilter run example1 --runs-override 10 --out results/demo
"""

from pgmfilter.harness import emit_outputs, load_config, run_campaign, shipped_config

cfg = load_config(shipped_config("example1")).with_overrides(runs=10, output_dir="results/demo")
res = run_campaign(cfg)
for name in res.filter_names:
    s = res.summaries[name]
    print(f"{name:5s} E_rms {s.E_rms_bar:7.3f}  NEES within bound {s.beta_c_pct:5.1f}%  V2sigma {s.V2sigma_hat:9.3g}")
paths = emit_outputs(res, cfg.output_dir)
print(f"wrote {len(paths)} files under {cfg.output_dir}")
