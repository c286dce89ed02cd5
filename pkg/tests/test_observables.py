import math

import numpy as np
import pytest

import oracles
import runs
from krflow.observables import (
    CSV_COLUMNS,
    calabi_length,
    mabuchi_length,
    perelman_monitor,
    rate_fit,
    record,
    tail_coupling,
)
from krflow.flow import initial_state
from krflow.geometry import beta_profile, round_profile
from krflow.specgrid import build_grid


def test_record_examples():
    g = build_grid(48)
    r = record(initial_state(round_profile(g)))
    assert r.l2_u_tilde < 1e-12 and r.c0_lap_u_tilde < 1e-10
    assert abs(r.a) < 1e-12 and abs(r.b) < 1e-12
    assert r.min_R == pytest.approx(1.0, abs=1e-10)
    b = record(initial_state(beta_profile(g, 0.1)))
    assert b.l2_u_tilde == pytest.approx(oracles.FROZEN["beta0.1_l2_u_tilde"], abs=1e-9)
    assert b.c0_R_minus_n == pytest.approx(0.4, abs=1e-9)
    assert len(b.as_row()) == len(CSV_COLUMNS) == 12


def test_trace_queries(beta48):
    tr = beta48
    assert np.all(np.diff(tr.times) > 0)
    np.testing.assert_allclose(np.diff(tr.times), tr.cadence, atol=1e-12)
    for i, t in enumerate(tr.times):
        for k in (1, 2, 3):
            if t + k <= tr.t_end + 1e-9:
                j = tr.offset(i, float(k))
                assert tr.times[j] == pytest.approx(t + k, abs=1e-9)
    with pytest.raises(KeyError):
        tr.index(0.0123)
    assert not tr.has(20.05)


def test_lap_equals_curvature_norms(beta48):
    c = beta48.columns
    np.testing.assert_allclose(c["l2_lap_u_tilde"], c["l2_R_minus_n"], atol=1e-10)
    np.testing.assert_allclose(c["c0_lap_u_tilde"], c["c0_R_minus_n"], atol=1e-10)


def test_rate_fit_synthetic():
    t = np.linspace(0, 10, 201)
    f = rate_fit((t, 5 * np.exp(-2 * t)), window=None)
    assert f.rate == pytest.approx(-2.0, abs=1e-12)
    assert f.intercept == pytest.approx(math.log(5), abs=1e-12)
    empty = rate_fit((t, np.full_like(t, 0.5)))
    assert not empty.ok and empty.n == 0


def test_rates(beta48):
    assert -2.2 <= rate_fit(beta48).rate <= -1.8


def test_odd_mode_rate():
    tr = runs.odd_run()
    fit = rate_fit(tr)
    assert fit.ok
    assert abs(fit.rate + 5.0) <= 0.5


def test_lengths(beta48, round32):
    L = mabuchi_length(beta48)
    assert 0.08 <= L.total <= 0.13
    assert L.tail >= 0 and L.value >= 0 and not L.partial
    assert L.u_variant > 0
    C = calabi_length(beta48)
    assert C.total > L.total
    R = mabuchi_length(round32)
    assert R.total < 1e-10
    assert calabi_length(round32).total < 1e-9
    # monotone in the upper endpoint
    ends = [mabuchi_length(beta48, (0.0, T)).value for T in (1.0, 2.0, 5.0, 10.0, 20.0)]
    assert np.all(np.diff(ends) >= 0)


def test_calabi_ratio_tends_to_three(beta48):
    c = beta48.columns
    i = beta48.index(6.0)
    assert c["l2_lap_u_tilde"][i] / c["l2_u_tilde"][i] == pytest.approx(3.0, rel=1e-3)


def test_mabuchi_cadence_refinement(beta48):
    fine = runs.cadence_run(48)
    a, b = mabuchi_length(beta48).value, mabuchi_length(fine).value
    assert abs(a - b) / b <= 1e-3
    # the built-in estimate predicts the change
    assert mabuchi_length(beta48).refinement_delta == pytest.approx(abs(a - b) / b, rel=0.1)


def test_subsample_matches_coarse_cadence(beta48):
    sub = beta48.subsample(2)
    assert sub.cadence == pytest.approx(0.1)
    assert sub.index(1.0) == 10


def test_perelman(beta48, beta64, round32):
    p = perelman_monitor(beta48)
    assert p["argmax_t"] <= 0.5
    assert p["min_R_monotone"] and p["min_R_initial"] == pytest.approx(0.6, abs=1e-9)
    q = perelman_monitor(beta64)
    assert abs(p["sup_triple_u_tilde"] - q["sup_triple_u_tilde"]) <= 0.01 * q["sup_triple_u_tilde"]
    assert abs(p["min_R_overall"] - q["min_R_overall"]) <= 0.01
    r = perelman_monitor(round32)
    assert r["sup_triple_u_tilde"] < 1e-8


def test_tail_coupling(beta48, beta64):
    c48, n48 = tail_coupling(beta48)
    c64, n64 = tail_coupling(beta64)
    assert n48 > 0 and np.isfinite(c48)
    assert abs(c48 - c64) <= 0.1 * c64
