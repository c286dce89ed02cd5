import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
import runs
from krflow import StepPolicy, beta_profile, build_grid, evolve, round_profile
from krflow.lemmas import (
    DEGENERATE,
    HYPOTHESIS,
    INCONCLUSIVE,
    PASS,
    VerificationConfig,
    calibrate_logsobolev,
    evolution_residuals,
    gronwall_check,
    heat_kernel_check,
    log_sobolev_defect,
    lyapunov_F_grad,
    lyapunov_F_lap,
    lyapunov_scan,
    min_scalar_monotone,
    moser_exponent,
    moser_integral,
    moser_trace,
    pssw_small_monitor,
    ratio_grad,
    ratio_lap,
    ratio_smooth,
    standard_family,
    supersolution_residual,
    theorem_chain,
    verify_all,
)

G48 = build_grid(48)


@pytest.fixture(scope="module")
def round24():
    return evolve(round_profile(build_grid(24)), StepPolicy(checkpoint_every=0.25), t_max=1.0)


@pytest.fixture(scope="module")
def short_beta():
    return evolve(beta_profile(build_grid(32), 0.1), StepPolicy(), t_max=0.5, companions=runs.COMPANIONS)


# ------------------------------------------------------------ config


def test_config_invariants():
    for bad in (dict(D_grad=0.4), dict(identity_tol=0.0), dict(moser_margin=0.5),
                dict(eps_grid=(0.1, 20.0)), dict(floor=-1.0)):
        with pytest.raises(ValueError):
            VerificationConfig(**bad)


# ------------------------------------------------------------ Gronwall


def test_gronwall_examples():
    t = np.linspace(0.0, 3.0, 61)
    assert gronwall_check(t, np.ones_like(t), 0.5).verdict == PASS
    assert gronwall_check(t, np.exp(0.5 * t), 0.5).verdict == PASS
    r = gronwall_check(t, np.exp(1.0 * t), 0.5)
    assert r.verdict == HYPOTHESIS and not r.hypothesis_ok
    with pytest.raises(ValueError):
        gronwall_check(np.array([0.0, 0.1, 0.3]), np.ones(3), 1.0)


@given(st.floats(0.0, 3.0), st.floats(-2.0, 0.0))
@settings(max_examples=25, deadline=None)
def test_gronwall_decaying_always_passes(k, rate):
    t = np.linspace(0.0, 2.0, 41)
    assert gronwall_check(t, 2.0 * np.exp(rate * t), k).verdict == PASS


# ------------------------------------------------------- evolution identities


def test_round_residuals_at_rounding(round24):
    r = evolution_residuals(round24)
    assert r.verdict == PASS
    for k in ("u", "u_tilde", "u_tilde_sq", "grad_sq", "lap_plus", "lap_minus", "a_scalar"):
        assert r.residuals[k] <= 1e-10, k
    # no curvature, so the sign of the quadratic term is not measurable
    assert r.constants["sigma"] is None


def test_beta_residuals(beta64):
    r = evolution_residuals(beta64)
    assert r.constants["sigma"] == -1 and r.constants["sigma_ratio"] > 100
    assert r.residuals["lap_minus"] <= 1e-5
    for k in ("u", "u_tilde", "u_tilde_sq", "grad_sq", "a_scalar"):
        assert r.residuals[k] <= 1e-5, k


def test_residuals_need_fine_stencils():
    tr = evolve(beta_profile(build_grid(24), 0.1), StepPolicy(checkpoint_every=0.5, stencil=0.05), t_max=1.0)
    assert evolution_residuals(tr, VerificationConfig(max_stencil=0.01)).verdict == INCONCLUSIVE


def test_residuals_converge_with_stencil():
    a = evolution_residuals(runs.stencil_run(48, 0.2, 0.005))
    b = evolution_residuals(runs.stencil_run(48, 0.2, 0.0025))
    for k in ("u", "u_tilde", "grad_sq", "lap_minus"):
        assert a.residuals[k] / b.residuals[k] >= 3.5, k


# ------------------------------------------------------- Lyapunov functionals


def test_lyapunov_bounds(beta48):
    r = lyapunov_F_grad(beta48, 1.0)
    assert r.verdict == PASS and r.constants["F_T1"] <= math.exp(r.constants["k_emp"]) * r.constants["F_T"]
    with pytest.raises(ValueError):
        lyapunov_F_grad(beta48, 1.0, D=0.49)
    with pytest.raises(ValueError):
        lyapunov_F_lap(beta48, 1.0, D=1.0)
    assert lyapunov_F_lap(beta48, 1.0).verdict == PASS


def test_lyapunov_round_degenerate(round32):
    for kind in ("grad", "lap"):
        assert lyapunov_scan(round32, kind).verdict == DEGENERATE


# ------------------------------------------------------------ ratios


def test_ratios_round_degenerate(round32):
    for fn in (ratio_grad, ratio_lap, ratio_smooth):
        assert fn(round32).verdict == DEGENERATE


def test_ratio_late_values(beta48):
    lim = oracles.late_time_ratios()
    assert ratio_grad(beta48).constants["late_time"] == pytest.approx(lim["grad"], rel=0.05)
    assert ratio_lap(beta48).constants["late_time"] == pytest.approx(lim["lap"], rel=0.05)
    assert ratio_smooth(beta48).constants["late_time"] == pytest.approx(lim["smooth"], rel=0.10)
    assert lim["grad"] == pytest.approx(oracles.FROZEN["ratio_grad_limit"], rel=1e-14)
    assert lim["smooth"] == pytest.approx(oracles.FROZEN["ratio_smooth_limit"], rel=1e-14)


def test_short_trace_inconclusive(short_beta):
    for fn in (ratio_grad, ratio_lap, ratio_smooth):
        assert fn(short_beta).verdict == INCONCLUSIVE
    assert theorem_chain(short_beta).verdict == INCONCLUSIVE
    assert lyapunov_scan(short_beta).verdict == INCONCLUSIVE
    assert evolution_residuals(short_beta).verdict == INCONCLUSIVE


# ------------------------------------------------------------ log-Sobolev


def test_constant_defect_closed_form():
    p = round_profile(G48)
    one = np.ones(G48.size)
    assert log_sobolev_defect(p, one, 1.0) == pytest.approx(oracles.FROZEN["constant_defect"], abs=1e-10)
    assert log_sobolev_defect(p, one, math.e) == pytest.approx(oracles.FROZEN["constant_defect"] + 0.5, abs=1e-10)
    # any metric of the same volume gives the same value for constants
    assert log_sobolev_defect(beta_profile(G48, 0.1), 3.0 * one, 1.0) == pytest.approx(
        oracles.FROZEN["constant_defect"], abs=1e-10)
    arr = log_sobolev_defect(p, one, np.array([1.0, math.e]))
    np.testing.assert_allclose(arr, [-0.5 * math.log(4 * math.pi), 0.5 - 0.5 * math.log(4 * math.pi)], atol=1e-10)


def test_defect_rejects_negative():
    with pytest.raises(ValueError):
        log_sobolev_defect(round_profile(G48), G48.nodes, 1.0)


def test_sharpening_family():
    p = beta_profile(G48, 0.1)
    x = G48.nodes
    d = [log_sobolev_defect(p, np.exp(-(x / w) ** 2), 1e-3) for w in (0.4, 0.2, 0.1, 0.05)]
    assert np.all(np.diff(d) > 0)
    fam = standard_family(G48)
    assert all(v.min() >= 0 for v in fam.values())


def test_logsobolev_calibration(beta48):
    r = calibrate_logsobolev(beta48.subsample(20))
    assert r.verdict == PASS
    assert r.constants["argmax"][0] == "constant"
    assert r.residuals["excess"] <= 1e-3


# ------------------------------------------------------------ heat kernel and Moser


def test_heat_kernel(round32):
    r = heat_kernel_check(round32, "one")
    assert r.constants["C_emp"] == pytest.approx(1.0 / (4 * math.pi), abs=1e-10)
    lin = heat_kernel_check(round32, "lin")
    assert lin.constants["ratio_at_0"] == pytest.approx(oracles.FROZEN["heat_frozen_linear"], abs=1e-4)
    with pytest.raises(KeyError):
        heat_kernel_check(round32, "bump")


def test_moser_exponent_examples():
    assert moser_exponent(0.0, 0.5) == pytest.approx((2.0, 1.0))
    p, eps = moser_exponent(0.0, 0.9)
    assert p == pytest.approx(10.0) and eps == pytest.approx(0.36)


def test_moser_integral():
    val, closed = moser_integral()
    assert val == pytest.approx(closed, abs=1e-10)
    assert val == pytest.approx(oracles.moser_log_integral(), abs=1e-10)
    assert closed == pytest.approx(oracles.FROZEN["moser_integral"], abs=1e-15)


def test_moser_trace(beta48):
    r = moser_trace(beta48, "bump", 0.0, -0.11422)
    assert r.verdict == PASS and r.residuals["slack"] > 0


# ------------------------------------------------------------ supersolution


def test_supersolution(beta64, round32):
    r = supersolution_residual(beta64)
    assert r.verdict == PASS and r.residuals["max_residual"] <= 1e-4
    assert supersolution_residual(beta64, D=0.0).verdict == HYPOTHESIS
    assert supersolution_residual(round32).verdict == DEGENERATE


# ------------------------------------------------------------ min R and PSSW


def test_min_scalar():
    tr = evolve(beta_profile(build_grid(32), -0.1), StepPolicy(), t_max=2.0)
    r = min_scalar_monotone(tr)
    # R = 1 - 0.2 (1 - 3x^2) is smallest at the equator
    assert r.constants["min_R_initial"] == pytest.approx(0.8, abs=1e-10)
    assert r.verdict == PASS and r.constants["nondecreasing"]


def test_min_scalar_beta(beta48):
    r = min_scalar_monotone(beta48)
    assert r.verdict == PASS and r.constants["min_R_initial"] == pytest.approx(0.6, abs=1e-9)


def test_pssw(beta48, beta64, round32):
    r = pssw_small_monitor(beta48, refined=beta64)
    assert r.verdict == PASS and np.isfinite(r.constants["K_emp"])
    assert pssw_small_monitor(beta48, delta=0.0).verdict == INCONCLUSIVE
    assert pssw_small_monitor(round32).verdict == DEGENERATE


# ------------------------------------------------------------ theorem chain


def test_theorem_chain(beta48, beta64, round32):
    r = theorem_chain(beta48, refined=beta64)
    assert r.verdict == PASS
    assert r.constants["rate_R"] == pytest.approx(-2.0, abs=0.2)
    assert 0.08 <= r.constants["mabuchi"] <= 0.13
    assert theorem_chain(round32).verdict == PASS


# ------------------------------------------------------------ driver


def test_verify_all_json_and_deterministic(round32):
    a = [r.to_dict() for r in verify_all(round32)]
    b = [r.to_dict() for r in verify_all(round32)]
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)
    names = [r["lemma"] for r in a]
    assert names.count("heat_kernel") == len(round32.companions)
    assert all(r["verdict"] in (PASS, DEGENERATE) for r in a), [(r["lemma"], r["verdict"]) for r in a]
