"""
Kahler-Ricci flow on S^1-invariant metrics of CP^1, with numerical checks of
the convergence argument's evolution identities and smoothing lemmas.
"""

from .specgrid import Grid, build_grid, interpolate, c0_norm
from .geometry import (
    VOLUME,
    DIM,
    MetricProfile,
    round_profile,
    beta_profile,
    chebyshev_profile,
    validate_profile,
    scalar_curvature,
    kahler_laplacian,
    gradient_and_hessian_norms,
    ricci_potential,
    snapshot,
)
from .flow import StepPolicy, evolve, step, initial_state, cfl_dt, temporal_order
from .observables import Trace, rate_fit, mabuchi_length, calabi_length, perelman_monitor
from .lemmas import VerificationConfig, LemmaReport, verify_all

__version__ = "0.1.0"
