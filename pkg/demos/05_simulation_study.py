"""
Desk-scale consistency check
============================

Repeats generate/fit/evaluate over seeded trials and aggregates recovery
statistics: how often the break-predictor set and change-point counts are
exactly right, how far estimated thresholds sit from the truth, and how
often each region's variable subset matches.

This is the 10-trial desk version; the acceptance suite runs 50 trials per
setting, and the CLI exposes the same loop:

    partwise simulate --setting reg1 --n 400 --sigma 1 --trials 50 --seed 1
"""

from partwise.simulate import run_trials, summarize_trials, trial_table

results = run_trials("reg1", n=400, trials=10, seed=1, sigma=1.0, threads=2)

############################################################
# Per-trial table

print("\n".join(trial_table(results)))

############################################################
# Aggregate summary (threshold errors compare the boundary order
# statistics, so an estimate splitting the data exactly like the truth
# counts as error zero)

summary = summarize_trials("reg1", 400, "sigma=1", results)
print()
print("\n".join(summary.to_rows()))
