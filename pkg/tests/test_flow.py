import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

import oracles
from krflow.flow import (
    CFLViolation,
    FlowState,
    PositivityLoss,
    StepPolicy,
    cfl_dt,
    companion_rhs,
    evolve,
    gauge_time_derivative,
    heat_rhs,
    initial_state,
    krf_rhs,
    krf_rhs_potential_form,
    step,
    temporal_order,
)
from krflow.geometry import (
    InvalidProfileError,
    beta_profile,
    chebyshev_profile,
    ricci_potential,
    round_profile,
    validate_profile,
)
from krflow.specgrid import build_grid

G32 = build_grid(32)
G48 = build_grid(48)


def test_rhs_examples():
    np.testing.assert_allclose(krf_rhs(round_profile(G32)), 0.0, atol=1e-10)
    rhs = krf_rhs(beta_profile(G48, 0.1))
    assert abs(rhs[G48.N // 2] - oracles.FROZEN["rhs0"]) < 1e-6
    np.testing.assert_allclose(rhs, oracles.beta_rhs(G48.nodes, 0.1), atol=1e-10)


@given(st.lists(st.floats(-0.3, 0.3), min_size=1, max_size=6), st.sampled_from([32, 48, 64]))
@settings(max_examples=30, deadline=None)
def test_rhs_forms_agree(coeffs, N):
    g = build_grid(N)
    p = chebyshev_profile(g, np.asarray(coeffs) / (1.0 + np.arange(len(coeffs))) ** 2)
    assume(bool(validate_profile(p)) and p.phi[1:-1].min() > 1e-6)
    a, b = krf_rhs(p), krf_rhs_potential_form(p)
    assert np.abs(a - b)[1:-1].max() <= 1e-8
    assert max(abs(a[0]), abs(a[-1])) <= 1e-8


def test_policy_invariants():
    for bad in (dict(dt=0.0), dict(safety=0.0), dict(cadence=0.03), dict(dt=3e-4),
                dict(checkpoint_every=0.07), dict(stencil=0.06)):
        with pytest.raises(ValueError):
            StepPolicy(**bad)
    StepPolicy(cadence=0.025, dt=None)


def test_cfl_bound():
    r32 = cfl_dt(round_profile(G32))
    # the pole node dominates: spacing h = 1 - cos(pi/32), scale |phi'| h, bound h/4
    assert r32 == pytest.approx(0.25 * (1 - math.cos(math.pi / 32)), rel=1e-12)
    assert r32 == pytest.approx(1.2038183e-3, rel=1e-7)
    assert cfl_dt(round_profile(build_grid(64))) < r32
    assert cfl_dt(round_profile(G32), safety=0.5) == pytest.approx(2 * r32)


def test_step_round_and_errors():
    s0 = initial_state(round_profile(G32))
    s1 = step(s0, StepPolicy())
    assert s1.t == pytest.approx(1e-4)
    assert np.abs(s1.profile.phi - s0.profile.phi).max() < 1e-12
    with pytest.raises(CFLViolation):
        step(s0, StepPolicy(), dt=0.01)
    # an invalid profile surfaces as a positivity abort
    with pytest.raises(PositivityLoss, match="positivity"):
        step(FlowState(0.0, beta_profile(G32, -1.2)), StepPolicy())


def test_beta_minus_point_six_is_valid():
    # h(0) = 1 - 0.6 = 0.4 > 0, so this member of the family flows normally
    p = beta_profile(G32, -0.6)
    assert validate_profile(p)
    tr = evolve(p, StepPolicy(), t_max=0.5)
    assert tr.complete


def test_evolve_rejects_invalid_initial():
    with pytest.raises(InvalidProfileError):
        evolve(beta_profile(G32, -1.2), StepPolicy(), t_max=1.0)


def test_abort_returns_partial_trace():
    tr = evolve(beta_profile(G32, 0.1), StepPolicy(dt=0.0025), t_max=1.0)
    assert not tr.complete and "CFL" in tr.message
    assert len(tr) == 1


def test_gauge_derivative():
    p = round_profile(G32)
    states = [FlowState(t, p) for t in (0.0, 0.01, 0.02)]
    x = G32.nodes
    assert np.abs(gauge_time_derivative(states, lambda s: x**2)).max() < 1e-12
    tr = evolve(beta_profile(G32, 0.1), StepPolicy(checkpoint_every=0.05, stencil=0.01), t_max=0.1)
    st_ = tr.stencils[0]
    from krflow.geometry import MetricProfile

    states = [FlowState(st_[k], MetricProfile(G32, st_[f]))
              for k, f in (("t_minus", "phi_minus"), ("t", "phi"), ("t_plus", "phi_plus"))]
    mid = states[1].profile
    # the coordinate is static at fixed x, so only the transport phi u' survives
    np.testing.assert_allclose(gauge_time_derivative(states, [x, x, x]),
                               mid.phi * ricci_potential(mid).slope, atol=1e-10)
    with pytest.raises(ValueError):
        gauge_time_derivative(states[:2], [x, x])


def test_heat_rhs():
    p = beta_profile(G32, 0.1)
    assert np.abs(heat_rhs(p, np.ones(G32.size))).max() < 1e-12
    x = G32.nodes
    r = round_profile(G32)
    # on the round metric 1 + x is an eigenfunction, with transport -x
    np.testing.assert_allclose(companion_rhs(r, 1 + x), -x, atol=1e-12)


def test_round_fixed_point(round32):
    assert round32.complete
    assert np.abs(round32.column("c0_profile_dist")).max() <= 1e-8
    # per unit time, the drift stays at rounding level
    per_unit = np.abs(np.diff(round32.phi[:: int(1 / round32.cadence)], axis=0)).max()
    assert per_unit <= 1e-10


def test_frozen_background_companion(round32):
    i = round32.index(1.0)
    x = G32.nodes
    np.testing.assert_allclose(round32.companions["lin"][i], 1 + math.exp(-1.0) * x, atol=1e-8)
    np.testing.assert_allclose(round32.companions["one"][i], 1.0, atol=1e-12)


def test_run_health(beta48):
    m = beta48.metadata
    assert beta48.complete
    assert m["rhs_form_gap"] <= 1e-8
    assert m["slope_drift"] <= 1e-5
    assert m["endpoint"] <= 1e-10
    assert m["potential_residual"] <= 1e-8
    for lab, data in beta48.companions.items():
        assert data.min() >= -1e-10
        peaks = data.max(axis=1)
        assert np.all(np.diff(peaks) <= 1e-12), lab


def test_stencils_centred_on_checkpoints(beta48):
    times = [s["t"] for s in beta48.stencils]
    np.testing.assert_allclose(times, np.arange(0.5, 20.0, 0.5))
    for s in beta48.stencils:
        assert s["t"] - s["t_minus"] == pytest.approx(0.005)
        assert s["t_plus"] - s["t"] == pytest.approx(0.005)
        np.testing.assert_array_equal(s["phi"], beta48.phi[beta48.index(s["t"])])


def test_stencil_equal_to_cadence():
    tr = evolve(beta_profile(G32, 0.1), StepPolicy(cadence=0.05, checkpoint_every=0.1, stencil=0.05),
                t_max=0.3)
    assert [s["t"] for s in tr.stencils] == pytest.approx([0.1, 0.2])
    for s in tr.stencils:
        np.testing.assert_array_equal(s["phi_minus"], tr.phi[tr.index(s["t_minus"])])
        np.testing.assert_array_equal(s["phi_plus"], tr.phi[tr.index(s["t_plus"])])


def test_deterministic():
    a = evolve(beta_profile(G32, 0.1), StepPolicy(), t_max=0.2)
    b = evolve(beta_profile(G32, 0.1), StepPolicy(), t_max=0.2)
    np.testing.assert_array_equal(a.phi, b.phi)
    for k in a.columns:
        np.testing.assert_array_equal(a.columns[k], b.columns[k])


def test_adaptive_step_lands_on_samples():
    tr = evolve(beta_profile(G32, 0.1), StepPolicy(dt=None), t_max=0.2)
    assert tr.complete
    np.testing.assert_allclose(tr.times, np.arange(5) * 0.05)


def test_halving_dt_reduces_error():
    res = temporal_order(beta_profile(G32, 0.1))
    e = res["errors"]
    assert e[0] / e[1] >= 14 and e[1] / e[2] >= 14
    assert res["ref_delta"] < e[-1]
