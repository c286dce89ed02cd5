"""
Checking the smoothing estimates along one run
==============================================

Every numerical check in ``krflow.lemmas`` takes a trace and returns a
report with a verdict and the measured constants. Here we run them all on a
short beta-family flow with two companion heat solutions.
"""

import numpy as np

from krflow import StepPolicy, beta_profile, build_grid, evolve
from krflow.lemmas import VerificationConfig, verify_all

grid = build_grid(32)
companions = [("one", np.ones_like), ("lin", lambda x: 1.0 + x)]
trace = evolve(beta_profile(grid, 0.1), StepPolicy(), t_max=6.0, companions=companions)

# keep the scan window inside the run
config = VerificationConfig(check_range=(0.0, 4.0))
for r in verify_all(trace, config):
    shown = {k: v for k, v in r.constants.items() if isinstance(v, float)}
    first = ", ".join(f"{k}={v:.4g}" for k, v in list(shown.items())[:3])
    print(f"{r.lemma:22s} {r.verdict:20s} {first}")

###############################################################################
# Ratios that come back ``inconclusive`` need a longer run; a round initial
# profile gives ``degenerate`` everywhere since nothing moves.
