"""
Flowing a squashed sphere to the round one
==========================================

A member of the beta family is evolved at modest resolution. We watch the
curvature settle to 1 and the Ricci potential decay like e^{-2t}.
"""

import numpy as np

from krflow import StepPolicy, beta_profile, build_grid, evolve, rate_fit

# 33 nodes are plenty for a smooth, even profile
grid = build_grid(32)
phi0 = beta_profile(grid, 0.1)
trace = evolve(phi0, StepPolicy(), t_max=8.0)

###############################################################################
# The curvature deviation shrinks by about e^{-2} per unit time.

c = trace.columns
for t in (0.0, 1.0, 2.0, 4.0, 8.0):
    i = trace.index(t)
    print(f"t = {t:4.1f}   ||R - 1||_C0 = {c['c0_R_minus_n'][i]:.3e}   "
          f"||u~||_L2 = {c['l2_u_tilde'][i]:.3e}")

###############################################################################
# A straight-line fit of log ||u~|| on the clean part of the run.

fit = rate_fit(trace)
print(f"\nfitted rate {fit.rate:.4f} over {fit.n} samples (expected -2)")

# the profile itself approaches (1 - x^2)/2
print(f"final distance to the round profile {np.abs(c['c0_profile_dist'][-1]):.2e}")
