"""
S^1-invariant metrics on CP^1 in momentum coordinates.

A metric in the class 2*pi*c_1 is a profile ``phi`` on [-1, 1] with the area
form dx ^ dtheta held fixed. With this convention

    Laplacian        (phi f')'
    scalar curvature -phi''
    |grad f|^2       phi f'^2
    |dd-bar f|^2     (Lap f)^2
    |Hess^{2,0} f|^2 phi^2 f''^2

and the round Kahler-Einstein profile is (1 - x^2)/2 with R = 1. Integrals
against the area form are 2*pi times integrals in x, so V = 4*pi.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from numpy.polynomial import chebyshev as C

from .specgrid import c0_norm

__all__ = [
    "VOLUME",
    "DIM",
    "MetricProfile",
    "ProfileCheck",
    "PotentialPair",
    "GeometrySnapshot",
    "PrecisionLossError",
    "InvalidProfileError",
    "round_profile",
    "beta_profile",
    "chebyshev_profile",
    "validate_profile",
    "scalar_curvature",
    "kahler_laplacian",
    "gradient_and_hessian_norms",
    "ricci_potential",
    "measure_integral",
    "mean",
    "norms",
    "snapshot",
]

VOLUME = 4.0 * np.pi
DIM = 1


class InvalidProfileError(ValueError):
    pass


class PrecisionLossError(ArithmeticError):
    """The Ricci potential slope lost its removable singularity at a pole."""


@dataclass(frozen=True, eq=False)
class MetricProfile:
    grid: object
    phi: np.ndarray

    @cached_property
    def dphi(self):
        return self.grid.d1 @ self.phi

    @cached_property
    def ddphi(self):
        return self.grid.d2 @ self.phi

    @property
    def x(self):
        return self.grid.nodes


@dataclass(frozen=True)
class ProfileCheck:
    valid: bool
    reason: str = ""
    magnitude: float = 0.0

    def __bool__(self):
        return self.valid


def round_profile(grid):
    x = grid.nodes
    return MetricProfile(grid, 0.5 * (1.0 - x**2))


def beta_profile(grid, beta):
    """``(1 - x^2)/2 * (1 + beta (1 - x^2))``, the closed-form test family."""
    x = grid.nodes
    s = 1.0 - x**2
    return MetricProfile(grid, 0.5 * s * (1.0 + beta * s))


def chebyshev_profile(grid, coeffs):
    """Round profile times ``1 + sum_k c_k (1 - x^2) T_k(x)``.

    The factor equals 1 at both poles, so the closure slopes are untouched.
    Even/odd parity follows from which ``c_k`` are nonzero.
    """
    x = grid.nodes
    s = 1.0 - x**2
    h = 1.0 + s * C.chebval(x, np.asarray(coeffs, dtype=float))
    return MetricProfile(grid, 0.5 * s * h)


def validate_profile(profile, endpoint_tol=1e-10, slope_tol=1e-6):
    phi = profile.phi
    if not np.all(np.isfinite(phi)):
        return ProfileCheck(False, "non-finite profile values", float("nan"))
    interior = phi[1:-1]
    if np.any(interior <= 0.0):
        return ProfileCheck(False, "phi not positive at interior nodes", float(interior.min()))
    ends = max(abs(phi[0]), abs(phi[-1]))
    if ends > endpoint_tol:
        return ProfileCheck(False, "phi does not vanish at the poles", float(ends))
    dphi = profile.dphi
    slope = max(abs(dphi[0] - 1.0), abs(dphi[-1] + 1.0))
    if slope > slope_tol:
        return ProfileCheck(False, "closure slopes phi'(-1)=1, phi'(1)=-1 violated", float(slope))
    return ProfileCheck(True)


def _require_valid(profile, check):
    if check:
        verdict = validate_profile(profile)
        if not verdict:
            raise InvalidProfileError(f"{verdict.reason} (magnitude {verdict.magnitude:.3e})")


def scalar_curvature(profile, check=False):
    _require_valid(profile, check)
    return -profile.ddphi


def kahler_laplacian(profile, f, check=False):
    _require_valid(profile, check)
    d1 = profile.grid.d1
    return d1 @ (profile.phi * (d1 @ f))


def gradient_and_hessian_norms(profile, f, check=False):
    """Return ``(|grad f|^2, |dd-bar f|^2, |Hess^{2,0} f|^2)`` at the nodes."""
    _require_valid(profile, check)
    phi = profile.phi
    df = profile.grid.d1 @ f
    lap = profile.grid.d1 @ (phi * df)
    return phi * df**2, lap**2, (phi * (profile.grid.d2 @ f)) ** 2


def measure_integral(grid, f):
    """Integral of ``f`` against the area form."""
    return 2.0 * np.pi * grid.integrate(f)


def mean(grid, f):
    return measure_integral(grid, f) / VOLUME


def norms(profile, f, gradient=False):
    """``(L1, L2, C0)`` of ``f``; of ``|grad f|`` when ``gradient`` is set."""
    grid = profile.grid
    if gradient:
        f = np.sqrt(np.maximum(profile.phi, 0.0)) * np.abs(grid.d1 @ f)
    l1 = measure_integral(grid, np.abs(f))
    l2 = np.sqrt(max(measure_integral(grid, f**2), 0.0))
    return l1, l2, c0_norm(grid, f)


@dataclass(frozen=True, eq=False)
class PotentialPair:
    """Ricci potential in the Gibbs (``u``) and zero-mean (``u_tilde``) normalizations.

    ``a`` is the area average of ``u`` and ``b`` its average against
    ``exp(-u)``. ``residual`` is the sup-norm of ``-Lap u - (R - 1)``.
    """

    u: np.ndarray
    u_tilde: np.ndarray
    a: float
    b: float
    slope: np.ndarray
    residual: float


def _potential_slope(profile, guard):
    x = profile.x
    phi, dphi, ddphi = profile.phi, profile.dphi, profile.ddphi
    q = dphi + x
    qend = max(abs(q[0]), abs(q[-1]))
    if qend > guard:
        raise PrecisionLossError(
            f"phi' + x does not vanish at the poles (|q| = {qend:.3e} > {guard:.1e})"
        )
    slope = np.empty_like(phi)
    slope[1:-1] = q[1:-1] / phi[1:-1]
    slope[0] = (ddphi[0] + 1.0) / dphi[0]
    slope[-1] = (ddphi[-1] + 1.0) / dphi[-1]
    return slope


def gibbs_shift(grid, u0):
    """Constant ``c`` with ``(1/V) int exp(-(u0 + c)) = 1``."""
    m = u0.min()
    return np.log(mean(grid, np.exp(-(u0 - m)))) - m


def ricci_potential(profile, guard=1e-6, check=False):
    _require_valid(profile, check)
    grid = profile.grid
    slope = _potential_slope(profile, guard)
    u0 = grid.cumint @ slope
    u_tilde = u0 - mean(grid, u0)
    u = u0 + gibbs_shift(grid, u0)
    a = mean(grid, u)
    b = mean(grid, u * np.exp(-u))
    R = -profile.ddphi
    residual = np.max(np.abs(-kahler_laplacian(profile, u) - (R - DIM)))
    return PotentialPair(u=u, u_tilde=u_tilde, a=float(a), b=float(b), slope=slope,
                         residual=float(residual))


def round_distance(profile):
    x = profile.x
    return c0_norm(profile.grid, profile.phi - 0.5 * (1.0 - x**2))


@dataclass(frozen=True, eq=False)
class GeometrySnapshot:
    """Profile plus every derived quantity the monitors and lemmas need."""

    profile: MetricProfile
    potentials: PotentialPair
    R: np.ndarray
    norms: dict

    @property
    def grid(self):
        return self.profile.grid


def snapshot(profile, guard=1e-6):
    grid = profile.grid
    pot = ricci_potential(profile, guard=guard)
    R = scalar_curvature(profile)
    ut = pot.u_tilde
    lap_ut = kahler_laplacian(profile, ut)
    lap_u = kahler_laplacian(profile, pot.u)
    l1, l2, c0 = norms(profile, ut)
    _, gl2, gc0 = norms(profile, ut, gradient=True)
    _, ll2, lc0 = norms(profile, lap_ut)
    _, rl2, rc0 = norms(profile, R - DIM)
    _, ul2, uc0 = norms(profile, pot.u)
    _, lul2, _ = norms(profile, lap_u)
    bundle = {
        "l1_u_tilde": l1,
        "l2_u_tilde": l2,
        "l2_grad_u_tilde": gl2,
        "l2_lap_u_tilde": ll2,
        "c0_u_tilde": c0,
        "c0_grad_u_tilde": gc0,
        "c0_lap_u_tilde": lc0,
        "l2_R_minus_n": rl2,
        "c0_R_minus_n": rc0,
        "a": pot.a,
        "b": pot.b,
        "min_R": float((grid.fine_matrix @ R).min()),
        "l2_u": ul2,
        "c0_u": uc0,
        "l2_lap_u": lul2,
        "c0_profile_dist": round_distance(profile),
    }
    return GeometrySnapshot(profile=profile, potentials=pot, R=R, norms=bundle)
