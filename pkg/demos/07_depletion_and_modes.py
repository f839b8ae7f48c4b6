"""
Why particles deplete and why mixtures help
===========================================

Importance weights of a prior cloud under an offset sharp likelihood collapse
onto a single particle. Separately, two benchmark systems split an initially
Gaussian cloud into two modes, which model selection detects.
"""

from pgmfilter.harness.demos import demo_bimodal, demo_particle_depletion

dep = demo_particle_depletion(out_dir=".")
print(f"max normalized weight {dep.max_weight:.3f}, effective sample size {dep.n_eff:.2f}")
for var, neff in zip(dep.sweep_vars, dep.sweep_n_eff):
    print(f"  prior variance {var:5.1f}: N_eff {neff:6.2f}")

a, b = demo_bimodal(n_seeds=20, out_dir=".")
print(f"two modes chosen: two-state system {a.fraction_two:.0%}, scalar model {b.fraction_two:.0%}")
