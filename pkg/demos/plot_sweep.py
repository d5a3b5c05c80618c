"""
A one-factor sweep
==================

Vary the sample size with everything else at the baseline and average the
structural metrics over a few seeded trials.
"""

from lagtabu import GenConfig, SweepSpec, run_sweep
from lagtabu.synth import summarize

spec = SweepSpec("sample size", "t_len", (500, 2000), GenConfig(n_vars=6), n_trials=3)
trials = run_sweep(spec)
for row in summarize(trials):
    print("T=%-5s F1 %.3f +- %.3f   BSF %.3f   lag MAE %.3f"
          % (row["value"], row["f1_mean"], row["f1_sd"], row["bsf_mean"], row["lag_mae_mean"]))
