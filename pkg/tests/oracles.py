"""
Independent reference values, computed without the package.

Everything here uses closed forms or scipy quadrature on the analytic
profile, so the package's collocation machinery is never consulted. The
FROZEN dict records the values these functions returned when the suite was
written; tests compare against both.
"""

import math

from scipy.integrate import quad

V = 4.0 * math.pi


def beta_phi(x, beta):
    s = 1.0 - x * x
    return 0.5 * s * (1.0 + beta * s)


def beta_curvature(x, beta):
    # -phi'' for phi = s/2 + beta s^2/2, s = 1 - x^2
    return 1.0 + 2.0 * beta * (1.0 - 3.0 * x * x)


def beta_rhs(x, beta):
    s = 1.0 - x * x
    phi = 0.5 * s * (1.0 + beta * s)
    dphi = -x * (1.0 + 2.0 * beta * s)
    ddphi = -beta_curvature(x, beta)
    return phi * ddphi - dphi**2 - x * dphi + phi


def beta_u0(x, beta):
    # u' = (phi' + x)/phi = -4 beta x / (1 + beta s), integrated in closed form
    return 2.0 * math.log(1.0 + beta * (1.0 - x * x))


def _avg(f):
    return 2.0 * math.pi * quad(f, -1.0, 1.0, epsabs=1e-13, epsrel=1e-13, limit=200)[0] / V


def beta_u_tilde(beta):
    """``(u_tilde(0), ||u_tilde||_L2, a, b)`` for the beta family."""
    m = _avg(lambda x: beta_u0(x, beta))
    ut = lambda x: beta_u0(x, beta) - m
    l2 = math.sqrt(2.0 * math.pi * quad(lambda x: ut(x) ** 2, -1, 1, epsabs=1e-14, epsrel=1e-14)[0])
    c = math.log(_avg(lambda x: math.exp(-beta_u0(x, beta))))
    u = lambda x: beta_u0(x, beta) + c
    a = _avg(u)
    b = _avg(lambda x: u(x) * math.exp(-u(x)))
    return ut(0.0), l2, a, b


def late_time_ratios():
    """Single-mode (P2) limits of the three ratio lemmas."""
    grad = math.exp(-2.0) * math.sqrt(3.0)
    p2_c0, grad_p2_c0 = 1.0, math.sqrt(9.0 / 8.0)
    p2_l2 = math.sqrt(V / 5.0)
    smooth = math.exp(-6.0) * (3.0 * p2_c0 + grad_p2_c0) / p2_l2
    return {"grad": grad, "lap": grad, "smooth": smooth}


def moser_log_integral():
    return quad(lambda s: -0.5 * math.log(4.0 * s * (1.0 - s)), 0.0, 1.0, epsabs=1e-14, limit=200)[0]


FROZEN = {
    "beta0.1_u_tilde_0": 0.06233454279247075,
    "beta0.1_l2_u_tilde": 0.20006437658502338,
    "R0": 1.2,
    "R_pole": 0.6,
    "rhs0": -0.11,
    "ratio_grad_limit": 0.23440758662253777,
    "ratio_smooth_limit": 0.006349065749365097,
    "moser_integral": 1.0 - math.log(2.0),
    "heat_frozen_linear": (1.0 + math.exp(-1.0)) / V,
    "constant_defect": -0.5 * math.log(V),
}
