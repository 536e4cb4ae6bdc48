"""The thin-film limit as a measured rate.

Shell solutions started from matched data v0/J are averaged across the
thickness and compared with the surface solution; the gap should shrink
linearly in eps.  A short final time keeps this demo under a minute; the
acceptance suite runs the same sweep to T = 0.5.
"""
from thinch import ExperimentConfig
from thinch.study import run_convergence_study

cfg = ExperimentConfig({
    "grid.n1": 32, "grid.n2": 16, "grid.n3": 6,
    "study.epsilons": [0.2, 0.1, 0.05, 0.025],
    "study.T": 0.05,
})
report = run_convergence_study(cfg)

cols = ("err_L2", "err_Lg", "err_bulk_u", "err_bulk_grad", "nd_scaled")
print("eps     " + " ".join(f"{c:>13s}" for c in cols))
for e in report.entries:
    print(f"{e['epsilon']:<7g} " + " ".join(f"{e[c]:13.3e}" for c in cols))
print("slope   " + " ".join(f"{report.fitted_rates[c]:13.3f}" for c in cols))
