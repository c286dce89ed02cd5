"""
Numerical checks of the evolution identities and smoothing estimates.

Every check is a pure function of one or two traces and a
:class:`VerificationConfig` and returns a :class:`LemmaReport`. Verdicts keep
three failure modes apart: a violated conclusion (``fail``), a violated
hypothesis (``hypothesis-violated``) and missing data (``inconclusive``).
Checks whose denominators vanish identically (the round metric) report
``degenerate``.
"""

import math
from dataclasses import dataclass, field, asdict

import numpy as np
from scipy.integrate import quad

from .geometry import (
    DIM,
    VOLUME,
    MetricProfile,
    gradient_and_hessian_norms,
    kahler_laplacian,
    measure_integral,
    mean,
    norms,
    snapshot,
)
from .observables import mabuchi_length, rate_fit

PASS = "pass"
FAIL = "fail"
INCONCLUSIVE = "inconclusive"
DEGENERATE = "degenerate"
HYPOTHESIS = "hypothesis-violated"


@dataclass(frozen=True)
class VerificationConfig:
    """Tolerances and constants for the checks.

    ``D_lap`` and ``D_smooth`` default to the smallest admissible value
    computed from the trace under test.
    """

    identity_tol: float = 1e-5
    max_stencil: float = 0.05
    D_grad: float = 0.5
    D_lap: float = None
    D_smooth: float = None
    delta_small: float = 0.05
    floor: float = 1e-10
    noise_floor: float = 1e-9
    refine_tol: float = 0.10
    supersolution_tol: float = 1e-4
    logsobolev_tol: float = 1e-3
    logsobolev_A: float = 10.0
    eps_grid: tuple = tuple(np.logspace(-3, 1, 41))
    moser_margin: float = 0.05
    min_R_tol: float = 1e-6
    gronwall_rtol: float = 1e-3
    check_range: tuple = (0.0, 15.0)
    late_window: tuple = (1e-7, 1e-5)

    def __post_init__(self):
        for name in ("identity_tol", "floor", "noise_floor", "refine_tol", "supersolution_tol",
                     "logsobolev_tol", "min_R_tol", "gronwall_rtol", "max_stencil"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.D_grad < 0.5:
            raise ValueError("D_grad must be at least 1/2")
        if not 0 < self.moser_margin < 0.5:
            raise ValueError("moser_margin must lie in (0, 1/2)")
        if max(self.eps_grid) > self.logsobolev_A or min(self.eps_grid) <= 0:
            raise ValueError("eps_grid must lie in (0, A]")


@dataclass
class LemmaReport:
    lemma: str
    verdict: str
    constants: dict = field(default_factory=dict)
    residuals: dict = field(default_factory=dict)
    deltas: dict = field(default_factory=dict)
    hypothesis_ok: bool = True
    notes: list = field(default_factory=list)

    @property
    def passed(self):
        return self.verdict in (PASS, DEGENERATE)

    def to_dict(self):
        return _jsonable(asdict(self))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def _rel_delta(a, b):
    scale = max(abs(a), abs(b))
    return 0.0 if scale == 0 else abs(a - b) / scale


# ---------------------------------------------------------------- Gronwall


def gronwall_check(times, F, k, rtol=1e-3, atol=1e-14):
    """``F' <= k F`` on ``[t, t+1]`` implies ``F(t+1) <= e^k F(t)``.

    The conclusion is only asserted on windows where the sampled hypothesis
    holds; windows where it fails are counted and flagged.
    """
    t = np.asarray(times, dtype=float)
    F = np.asarray(F, dtype=float)
    h = t[1] - t[0]
    if not np.allclose(np.diff(t), h, rtol=1e-9, atol=1e-12):
        raise ValueError("samples must be uniform in time")
    m = int(round(1.0 / h))
    dF = np.gradient(F, h, edge_order=2)
    hyp = dF <= k * F + rtol * np.abs(k * F) + atol
    checked = violated = skipped = 0
    worst = -np.inf
    for i in range(len(t) - m):
        if not hyp[i:i + m + 1].all():
            skipped += 1
            continue
        checked += 1
        bound = math.exp(k) * F[i]
        worst = max(worst, F[i + m] - bound)
        if F[i + m] > bound * (1 + rtol) + atol:
            violated += 1
    if checked == 0:
        verdict = HYPOTHESIS if skipped else INCONCLUSIVE
    else:
        verdict = FAIL if violated else PASS
    return LemmaReport(
        lemma="gronwall",
        verdict=verdict,
        constants={"k": k, "bound_factor": math.exp(k)},
        residuals={"max_excess": worst if checked else None},
        hypothesis_ok=skipped == 0,
        notes=[f"windows checked {checked}, conclusion violations {violated}, "
               f"hypothesis failures {skipped}"],
    )


# ------------------------------------------------------ evolution identities


class _Stencil:
    """Three profiles around a checkpoint, with their snapshots."""

    def __init__(self, grid, st):
        self.t = (st["t_minus"], st["t"], st["t_plus"])
        self.profiles = [MetricProfile(grid, st[k]) for k in ("phi_minus", "phi", "phi_plus")]
        self.snaps = [snapshot(p) for p in self.profiles]
        self.grid = grid

    @property
    def width(self):
        return max(self.t[1] - self.t[0], self.t[2] - self.t[1])

    def dt_scalar(self, vals):
        tm, t0, tp = self.t
        hm, hp = t0 - tm, tp - t0
        fm, f0, fp = vals
        return (hm**2 * fp - hp**2 * fm + (hp**2 - hm**2) * f0) / (hm * hp * (hm + hp))

    def Dt(self, fn):
        """Complex-gauge time derivative of the field ``fn(profile, snapshot)``."""
        vals = [fn(p, s) for p, s in zip(self.profiles, self.snaps)]
        prof = self.profiles[1]
        transport = (prof.dphi + prof.x) * (self.grid.d1 @ vals[1])
        return self.dt_scalar(vals) + transport


def _ut(p, s):
    return s.potentials.u_tilde


def _identity_residuals(st):
    prof, snap = st.profiles[1], st.snaps[1]
    pot = snap.potentials
    u, ut, b = pot.u, pot.u_tilde, pot.b
    lap = lambda f: kahler_laplacian(prof, f)
    grad2, ddbar2, hess2 = gradient_and_hessian_norms(prof, ut)
    mean_grad2 = mean(prof.grid, grad2)
    lap_ut = lap(ut)
    fields = {
        "u": st.Dt(lambda p, s: s.potentials.u) - (lap(u) + u - b),
        "u_tilde": st.Dt(_ut) - (lap_ut + ut + mean_grad2),
        "u_tilde_sq": st.Dt(lambda p, s: s.potentials.u_tilde**2)
        - (lap(ut**2) - 2 * grad2 + 2 * ut**2 + 2 * ut * mean_grad2),
        "grad_sq": st.Dt(lambda p, s: gradient_and_hessian_norms(p, s.potentials.u_tilde)[0])
        - (lap(grad2) - ddbar2 - hess2 + grad2),
    }
    dlap = st.Dt(lambda p, s: kahler_laplacian(p, s.potentials.u_tilde))
    base = dlap - (lap(lap_ut) + lap_ut)
    fields["lap_plus"] = base - ddbar2
    fields["lap_minus"] = base + ddbar2
    out = {k: norms(prof, v)[1] for k, v in fields.items()}
    a_vals = [s.potentials.a for s in st.snaps]
    b_vals = [s.potentials.b for s in st.snaps]
    mean_grad_u = mean(prof.grid, gradient_and_hessian_norms(prof, u)[0])
    out["a_scalar"] = abs(st.dt_scalar(a_vals) - ((a_vals[1] - b_vals[1]) - mean_grad_u))
    out["quadratic_term"] = norms(prof, ddbar2)[1]
    return out


def evolution_residuals(trace, config=None):
    """L2 residuals of the pointwise evolution identities on every stencil.

    Identities: Ricci potential (Gibbs and zero-mean normalizations), its
    square, the gradient energy density, and the Laplacian with both signs of
    the ``|dd-bar u|^2`` term, plus the scalar identity for the average ``a``.
    """
    config = config or VerificationConfig()
    if not trace.stencils:
        return LemmaReport("evolution_residuals", INCONCLUSIVE, notes=["no stencil checkpoints"])
    stencils = [_Stencil(trace.grid, st) for st in trace.stencils]
    width = max(s.width for s in stencils)
    if width > config.max_stencil:
        return LemmaReport("evolution_residuals", INCONCLUSIVE,
                           notes=[f"stencil width {width:.3g} coarser than {config.max_stencil}"])
    per = [_identity_residuals(s) for s in stencils]
    keys = per[0].keys()
    worst = {k: max(r[k] for r in per) for k in keys}
    plus, minus = worst["lap_plus"], worst["lap_minus"]
    chosen = min(plus, minus)
    if worst["quadratic_term"] < config.noise_floor:
        sigma, ratio = None, None
    else:
        sigma = -1 if minus <= plus else 1
        ratio = (max(plus, minus) / chosen) if chosen > 0 else float("inf")
    checked = ("u", "u_tilde", "u_tilde_sq", "grad_sq", "a_scalar")
    ok = all(worst[k] <= config.identity_tol for k in checked) and chosen <= config.identity_tol
    notes = [f"{len(per)} stencils, width {width:.3g}"]
    if sigma is None:
        notes.append("|dd-bar u|^2 below the noise floor: sign not measurable")
    elif sigma == -1:
        notes.append("the |dd-bar u|^2 term enters the Laplacian identity with a minus sign")
    return LemmaReport(
        lemma="evolution_residuals",
        verdict=PASS if ok else FAIL,
        constants={"sigma": sigma, "sigma_ratio": ratio, "stencil_width": width,
                   "times": [s.t[1] for s in stencils]},
        residuals=worst,
        notes=notes,
    )


# ------------------------------------------------------- Lyapunov functionals


def _window(trace, T):
    i0 = trace.index(T)
    i1 = trace.index(T + 1.0)
    return slice(i0, i1 + 1)


def _lyapunov(trace, T, D, kind, config):
    sl = _window(trace, T)
    t = trace.times[sl]
    c = trace.columns
    if kind == "grad":
        top, bottom = c["l2_grad_u_tilde"][sl] ** 2, c["l2_u_tilde"][sl] ** 2
    else:
        top, bottom = c["l2_lap_u_tilde"][sl] ** 2, c["l2_grad_u_tilde"][sl] ** 2
    F = (t - T) * top + D * bottom
    k_emp = float(np.max(2.0 + c["c0_lap_u_tilde"][sl]))
    lemma = f"lyapunov_F_{kind}"
    if F[0] <= config.floor**2:
        return LemmaReport(lemma, DEGENERATE, constants={"T": T, "D": D, "k_emp": k_emp},
                           notes=["F(T) below floor"])
    growth = np.gradient(np.log(F), t, edge_order=2)
    bound = math.exp(k_emp) * F[0]
    margin = bound / F[-1] if F[-1] > 0 else float("inf")
    return LemmaReport(
        lemma=lemma,
        verdict=PASS if F[-1] <= bound else FAIL,
        constants={"T": T, "D": D, "k_emp": k_emp, "max_log_growth": float(growth.max()),
                   "F_T": float(F[0]), "F_T1": float(F[-1]), "margin": margin},
        hypothesis_ok=bool(growth.max() <= k_emp),
    )


def lyapunov_F_grad(trace, T, D=None, config=None):
    """``F = int (t-T)|grad u~|^2 + D u~^2`` satisfies ``F(T+1) <= e^k F(T)``."""
    config = config or VerificationConfig()
    D = config.D_grad if D is None else D
    if D < 0.5:
        raise ValueError(f"D = {D} below the admissible bound 1/2")
    return _lyapunov(trace, T, D, "grad", config)


def lap_lower_bound(trace):
    return DIM + 2.0 * float(trace.column("c0_lap_u_tilde").max())


def lyapunov_F_lap(trace, T, D=None, config=None):
    """Laplacian version with ``D >= n + 2 sup ||Lap u~||_C0``."""
    config = config or VerificationConfig()
    bound = lap_lower_bound(trace)
    D = (config.D_lap if config.D_lap is not None else bound) if D is None else D
    if D < bound - 1e-12:
        raise ValueError(f"D = {D} below the admissible bound {bound:.6g}")
    return _lyapunov(trace, T, D, "lap", config)


def lyapunov_scan(trace, kind="grad", t_range=None, config=None):
    """Run a Lyapunov check at every sampled ``T`` in ``t_range``."""
    config = config or VerificationConfig()
    lo, hi = t_range or config.check_range
    fn = lyapunov_F_grad if kind == "grad" else lyapunov_F_lap
    reports = []
    for T in trace.times:
        if lo - 1e-9 <= T <= hi + 1e-9 and trace.has(T + 1.0):
            reports.append(fn(trace, float(T), config=config))
    if not reports:
        return LemmaReport(f"lyapunov_scan_{kind}", INCONCLUSIVE, notes=["no admissible T"])
    fails = [r.constants["T"] for r in reports if r.verdict == FAIL]
    active = [r for r in reports if r.verdict != DEGENERATE]
    verdict = FAIL if fails else (PASS if active else DEGENERATE)
    return LemmaReport(
        lemma=f"lyapunov_scan_{kind}",
        verdict=verdict,
        constants={
            "n_checked": len(active),
            "n_degenerate": len(reports) - len(active),
            "k_emp_max": max(r.constants["k_emp"] for r in reports),
            "min_margin": min((r.constants["margin"] for r in active), default=None),
            "max_log_growth": max((r.constants["max_log_growth"] for r in active), default=None),
        },
        hypothesis_ok=all(r.hypothesis_ok for r in reports),
        notes=[f"violations at T = {fails}"] if fails else [],
    )


# ------------------------------------------------------------ ratio checks


def _ratio_series(trace, num, den, offset, config, t_range=None):
    c = trace.columns
    numer = num(c)
    denom = den(c)
    lo, hi = t_range or (0.0, trace.t_end)
    ts, vals = [], []
    floored = 0
    for i, t in enumerate(trace.times):
        if not (lo - 1e-9 <= t <= hi + 1e-9) or not trace.has(t + offset):
            continue
        j = trace.offset(i, offset)
        if denom[i] < config.floor or numer[j] < config.noise_floor:
            floored += 1
            continue
        ts.append(float(t))
        vals.append(numer[j] / denom[i])
    return np.array(ts), np.array(vals), floored


def _late_value(trace, ts, vals, config):
    if len(ts) == 0:
        return None
    w = trace.column("l2_u_tilde")
    lo, hi = config.late_window
    sel = [k for k, t in enumerate(ts) if lo <= w[trace.index(t)] <= hi]
    return float(np.median(vals[sel])) if sel else None


_RATIOS = {
    "ratio_grad": (lambda c: c["l2_grad_u_tilde"], lambda c: c["l2_u_tilde"], 1.0),
    "ratio_lap": (lambda c: c["l2_lap_u_tilde"], lambda c: c["l2_grad_u_tilde"], 1.0),
    "ratio_smooth": (lambda c: c["c0_lap_u_tilde"] + c["c0_grad_u_tilde"],
                     lambda c: c["l2_u_tilde"], 3.0),
}


def _ratio_check(name, trace, config, refined, t_range):
    config = config or VerificationConfig()
    num, den, off = _RATIOS[name]
    ts, vals, floored = _ratio_series(trace, num, den, off, config, t_range)
    if len(vals) == 0:
        if floored == 0:
            return LemmaReport(name, INCONCLUSIVE, notes=["trace too short for the window offset"])
        return LemmaReport(name, DEGENERATE, constants={"n_floored": floored},
                           notes=["all samples below the floors"])
    k = int(np.argmax(vals))
    sup = float(vals[k])
    consts = {"C_emp": sup, "argmax_t": ts[k], "late_time": _late_value(trace, ts, vals, config),
              "n_samples": len(vals), "n_floored": floored}
    deltas = {}
    verdict = PASS if np.isfinite(sup) else FAIL
    if refined is not None:
        ts2, vals2, _ = _ratio_series(refined, num, den, off, config, t_range)
        if len(vals2):
            deltas["C_emp"] = _rel_delta(sup, float(vals2.max()))
            late2 = _late_value(refined, ts2, vals2, config)
            if consts["late_time"] is not None and late2 is not None:
                deltas["late_time"] = _rel_delta(consts["late_time"], late2)
            if deltas["C_emp"] > config.refine_tol:
                verdict = FAIL
    return LemmaReport(name, verdict, constants=consts, deltas=deltas)


def ratio_grad(trace, config=None, refined=None, t_range=None):
    """Sup of ``||grad u~||_L2(t+1) / ||u~||_L2(t)``."""
    return _ratio_check("ratio_grad", trace, config, refined, t_range)


def ratio_lap(trace, config=None, refined=None, t_range=None):
    """Sup of ``||Lap u~||_L2(t+1) / ||grad u~||_L2(t)``."""
    return _ratio_check("ratio_lap", trace, config, refined, t_range)


def ratio_smooth(trace, config=None, refined=None, t_range=None):
    """Sup of ``(||Lap u~||_C0 + ||grad u~||_C0)(t+3) / ||u~||_L2(t)``."""
    return _ratio_check("ratio_smooth", trace, config, refined, t_range)


# ------------------------------------------------------------ log-Sobolev


def log_sobolev_defect(profile, v, eps):
    """``int v^2 ln v - eps int |grad v|^2 + (n/2) ln eps`` for ``v`` scaled to unit L2.

    ``eps`` may be an array, in which case an array of defects is returned.
    """
    grid = profile.grid
    v = np.asarray(v, dtype=float)
    if v.min() < -1e-10:
        raise ValueError("test function must be non-negative")
    v = np.maximum(v, 0.0)
    v = v / math.sqrt(measure_integral(grid, v * v))
    pos = v > 0
    ent = measure_integral(grid, np.where(pos, v * v * np.log(np.where(pos, v, 1.0)), 0.0))
    energy = measure_integral(grid, profile.phi * (grid.d1 @ v) ** 2)
    eps = np.asarray(eps, dtype=float)
    out = ent - eps * energy + 0.5 * DIM * np.log(eps)
    return float(out) if out.ndim == 0 else out


def standard_family(grid):
    """Non-negative S^1-invariant test functions: constant, polar caps, ring bumps."""
    x = grid.nodes
    fam = {"constant": np.ones_like(x)}
    for w in (0.4, 0.2, 0.1, 0.05, 0.025):
        fam[f"cap+{w}"] = np.exp(-(1.0 - x) / w)
        fam[f"cap-{w}"] = np.exp(-(1.0 + x) / w)
    for c in (-0.5, 0.0, 0.5):
        for w in (0.4, 0.2, 0.1):
            fam[f"ring{c:+}/{w}"] = np.exp(-(((x - c) / w) ** 2))
    return fam


def _family_sup(profile, family, eps):
    best, arg = -np.inf, None
    per_eps = np.full(len(eps), -np.inf)
    for name, v in family.items():
        d = log_sobolev_defect(profile, v, eps)
        per_eps = np.maximum(per_eps, d)
        j = int(np.argmax(d))
        if d[j] > best:
            best, arg = float(d[j]), (name, float(eps[j]))
    return best, arg, per_eps


def calibrate_logsobolev(traces, family=None, eps_grid=None, config=None):
    """Calibrate the log-Sobolev constant at t = 0 and check it along the runs.

    ``traces`` is a trace or list of traces sharing the initial data's grid.
    """
    config = config or VerificationConfig()
    traces = traces if isinstance(traces, (list, tuple)) else [traces]
    eps = np.asarray(eps_grid if eps_grid is not None else config.eps_grid, dtype=float)
    if eps.max() > config.logsobolev_A:
        raise ValueError("eps grid exceeds A")
    first = traces[0]
    fam = family or standard_family(first.grid)
    c_emp, arg, per_eps0 = _family_sup(first.profile(0), fam, eps)
    worst, worst_t, worst_eps_excess = -np.inf, None, -np.inf
    for tr in traces:
        for i in range(1, len(tr)):
            s, _, per_eps = _family_sup(tr.profile(i), fam, eps)
            if s > worst:
                worst, worst_t = s, float(tr.times[i])
            worst_eps_excess = max(worst_eps_excess, float(np.max(per_eps - per_eps0)))
    excess = worst - c_emp if np.isfinite(worst) else -np.inf
    return LemmaReport(
        lemma="log_sobolev",
        verdict=PASS if excess <= config.logsobolev_tol else FAIL,
        constants={"C_emp": c_emp, "argmax": arg, "sup_later": worst, "sup_later_t": worst_t,
                   "A": config.logsobolev_A},
        residuals={"excess": excess, "per_eps_excess": worst_eps_excess},
        notes=["per_eps_excess compares sup over the family at each eps separately (diagnostic)"],
    )


# ------------------------------------------------------------ heat kernel


def heat_kernel_check(trace, label, config=None, refined=None, t_range=None):
    """Sup of ``||f||_C0(t+1) / ||f||_L1(t)`` for a companion heat solution."""
    config = config or VerificationConfig()
    if label not in trace.companions:
        raise KeyError(f"companion {label!r} missing from trace")

    def series(tr):
        l1, c0 = tr.companion_norms(label)
        lo, hi = t_range or (0.0, tr.t_end)
        ts, vals = [], []
        for i, t in enumerate(tr.times):
            if lo - 1e-9 <= t <= hi + 1e-9 and tr.has(t + 1.0) and l1[i] > config.floor:
                ts.append(float(t))
                vals.append(c0[tr.offset(i, 1.0)] / l1[i])
        return np.array(ts), np.array(vals), float(np.min(tr.companions[label]))

    ts, vals, fmin = series(trace)
    if len(vals) == 0:
        return LemmaReport("heat_kernel", INCONCLUSIVE, notes=["no admissible t"])
    k = int(np.argmax(vals))
    consts = {"label": label, "C_emp": float(vals[k]), "argmax_t": ts[k],
              "ratio_at_0": float(vals[0]), "min_f": fmin,
              "ratio_trend_decreasing": bool(vals[-1] <= vals[0] + 1e-12)}
    deltas = {}
    verdict = PASS if np.isfinite(vals[k]) and fmin >= -1e-10 else FAIL
    if refined is not None:
        _, vals2, _ = series(refined)
        deltas["C_emp"] = _rel_delta(consts["C_emp"], float(vals2.max()))
        if deltas["C_emp"] > config.refine_tol:
            verdict = FAIL
    return LemmaReport("heat_kernel", verdict, constants=consts, deltas=deltas)


# --------------------------------------------------------- supersolution


def smoothing_function(profile, snap, D, weight=1.0):
    ut = snap.potentials.u_tilde
    grad2, ddbar2, _ = gradient_and_hessian_norms(profile, ut)
    return weight * (ddbar2 + D * grad2)


def supersolution_residual(trace, config=None, D=None, window=None):
    """Max over nodes of ``(D_t - Lap) f`` for ``f = e^{-2(t-T)}[(Lap u~)^2 + D |grad u~|^2]``.

    ``T`` is each stencil's centre. Also reports the L1 -> C0 ratio of ``f``
    over unit time along the records.
    """
    config = config or VerificationConfig()
    bound = 2.0 * float(trace.column("c0_lap_u_tilde").max())
    D = (config.D_smooth if config.D_smooth is not None else bound) if D is None else D
    hyp = D >= bound - 1e-12
    if not trace.stencils:
        return LemmaReport("supersolution", INCONCLUSIVE, notes=["no stencil checkpoints"])
    worst, worst_t, scale = -np.inf, None, 0.0
    for raw in trace.stencils:
        if window is not None and not window[0] - 1e-9 <= raw["t"] <= window[1] + 1e-9:
            continue
        st = _Stencil(trace.grid, raw)
        T = st.t[1]

        def f_of(p, s, _st=st):
            idx = [q is p for q in _st.profiles].index(True)
            return smoothing_function(p, s, D, math.exp(-2.0 * (_st.t[idx] - T)))

        prof = st.profiles[1]
        f_mid = f_of(prof, st.snaps[1])
        r = st.Dt(f_of) - kahler_laplacian(prof, f_mid)
        scale = max(scale, float(np.max(np.abs(f_mid))))
        m = float(np.max(r))
        if m > worst:
            worst, worst_t = m, T
    if worst_t is None:
        return LemmaReport("supersolution", INCONCLUSIVE, notes=["no stencils in window"])
    chain = _smoothing_chain(trace, D, config)
    if not hyp:
        verdict = HYPOTHESIS
    elif scale < config.noise_floor:
        verdict = DEGENERATE
    else:
        verdict = PASS if worst <= config.supersolution_tol else FAIL
    return LemmaReport(
        lemma="supersolution",
        verdict=verdict,
        constants={"D": D, "D_bound": bound, "max_f": scale, "argmax_t": worst_t,
                   "chain_C_emp": chain},
        residuals={"max_residual": worst},
        hypothesis_ok=hyp,
        notes=[] if hyp else ["D below 2 sup ||Lap u~||_C0: a positive residual does not count against the lemma"],
    )


def _smoothing_chain(trace, D, config):
    m = int(round(1.0 / trace.cadence))
    best = None
    for i in range(0, len(trace) - m, m):
        p0, p1 = trace.profile(i), trace.profile(i + m)
        f0 = smoothing_function(p0, trace.snapshot(i), D)
        f1 = smoothing_function(p1, trace.snapshot(i + m), D, math.exp(-2.0))
        l1 = norms(p0, f0)[0]
        if l1 < config.floor or norms(p1, f1)[2] < config.noise_floor:
            continue
        r = norms(p1, f1)[2] / l1
        best = r if best is None else max(best, r)
    return best


# ------------------------------------------------------------ Moser trace


def moser_integral(n=DIM):
    """``int_0^1 -(n/2) ln(4 s (1 - s)) ds`` by adaptive quadrature and in closed form."""
    val, _ = quad(lambda s: -0.5 * n * math.log(4.0 * s * (1.0 - s)), 0.0, 1.0,
                  epsabs=1e-13, epsrel=1e-13, limit=200)
    return val, n * (1.0 - math.log(2.0))


def moser_exponent(T, t):
    """``(p, eps)`` with ``p = 1/(T+1-t)`` and ``eps = 4(T+1-t)(t-T)``."""
    return 1.0 / (T + 1.0 - t), 4.0 * (T + 1.0 - t) * (t - T)


def _lp_norm(profile, f, p):
    m = float(np.max(np.abs(f)))
    if m == 0.0:
        return 0.0
    return m * measure_integral(profile.grid, (np.abs(f) / m) ** p) ** (1.0 / p)


def moser_trace(trace, label, T, c_emp, config=None):
    """Discrete version of the L1 -> L-infinity iteration with exponent ``p(t)``."""
    config = config or VerificationConfig()
    f_all = trace.companions[label]
    i0 = trace.index(T)
    trace.index(T + 1.0)
    margin = config.moser_margin
    idx = [i for i, t in enumerate(trace.times)
           if T + margin - 1e-9 <= t <= T + 1.0 - margin + 1e-9]
    l1 = norms(trace.profile(i0), f_all[i0])[0]
    if l1 < config.floor:
        return LemmaReport("moser_trace", INCONCLUSIVE, notes=["companion below floor"])
    ts = trace.times[idx]
    ps = np.array([moser_exponent(T, t)[0] for t in ts])
    eps = np.array([moser_exponent(T, t)[1] for t in ts])
    logs = np.array([math.log(_lp_norm(trace.profile(i), f_all[i], p)) for i, p in zip(idx, ps)])
    rminus0 = max(0.0, -float(trace.column("min_R")[0]))
    const = rminus0 + DIM + c_emp
    integral, closed = moser_integral()
    lhs = logs[-1] - math.log(l1)
    rhs = integral + const
    dlog = np.gradient(logs, ts, edge_order=2)
    pointwise = -0.5 * DIM * np.log(eps) + const
    return LemmaReport(
        lemma="moser_trace",
        verdict=PASS if lhs <= rhs else FAIL,
        constants={"T": T, "p_last": float(ps[-1]), "C_log_sobolev": c_emp,
                   "sup_R_minus_0": rminus0, "log_integral": integral,
                   "log_integral_closed_form": closed},
        residuals={"lhs": lhs, "rhs": rhs, "slack": rhs - lhs,
                   "pointwise_max_excess": float(np.max(dlog - pointwise))},
    )


# ------------------------------------------------- curvature and PSSW checks


def min_scalar_monotone(trace, config=None):
    config = config or VerificationConfig()
    min_R = trace.column("min_R")
    floor = min(min_R[0], DIM) - config.min_R_tol
    bad = np.nonzero(min_R < floor)[0]
    return LemmaReport(
        lemma="min_scalar_monotone",
        verdict=PASS if bad.size == 0 else FAIL,
        constants={"min_R_initial": float(min_R[0]), "min_R_final": float(min_R[-1]),
                   "min_R_overall": float(min_R.min()),
                   "nondecreasing": bool(np.all(np.diff(min_R) >= -config.min_R_tol))},
        residuals={"max_drop": float(max(0.0, floor + config.min_R_tol - min_R.min()))},
        notes=[f"first violation at t = {trace.times[bad[0]]}"] if bad.size else [],
    )


def _pssw_series(trace, delta, config, which):
    c = trace.columns
    den = c["c0_u"] if which == "u" else c["c0_u_tilde"]
    ts, vals = [], []
    for i, t in enumerate(trace.times):
        if not trace.has(t + 2.0) or den[i] > delta or den[i] < config.floor:
            continue
        j = trace.offset(i, 2.0)
        ts.append(float(t))
        vals.append((c["c0_grad_u_tilde"][j] + c["c0_R_minus_n"][i]) / den[i])
    return np.array(ts), np.array(vals)


def pssw_small_monitor(trace, delta=None, config=None, refined=None):
    """Empirical ``K`` in ``||grad u||_C0(t+2) + ||R-n||_C0(t) <= K ||u||_C0(t)``."""
    config = config or VerificationConfig()
    delta = config.delta_small if delta is None else delta
    ts, vals = _pssw_series(trace, delta, config, "u")
    if len(vals) == 0:
        c0u = trace.column("c0_u")
        verdict = DEGENERATE if np.all(c0u < config.floor) else INCONCLUSIVE
        return LemmaReport("pssw_small", verdict, constants={"delta": delta},
                           notes=["no admissible t"])
    k = int(np.argmax(vals))
    _, vals_t = _pssw_series(trace, delta, config, "u_tilde")
    consts = {"delta": delta, "K_emp": float(vals[k]), "argmax_t": ts[k],
              "first_small_t": ts[0],
              "K_emp_u_tilde": float(vals_t.max()) if len(vals_t) else None}
    deltas = {}
    verdict = PASS if np.isfinite(vals[k]) else FAIL
    if refined is not None:
        _, v2 = _pssw_series(refined, delta, config, "u")
        if len(v2):
            deltas["K_emp"] = _rel_delta(consts["K_emp"], float(v2.max()))
            if deltas["K_emp"] > config.refine_tol:
                verdict = FAIL
    return LemmaReport("pssw_small", verdict, constants=consts, deltas=deltas)


# ------------------------------------------------------------ theorem chain


def _integral_with_tail(trace, quantity, t0=0.0, t1=None):
    t1 = trace.t_end if t1 is None else t1
    sl = slice(trace.index(t0), trace.index(t1) + 1)
    t, q = trace.times[sl], trace.column(quantity)[sl]
    val = float(np.trapezoid(q, t)) if hasattr(np, "trapezoid") else float(np.trapz(q, t))
    return val, t, q


def theorem_chain(trace, split=3.0, config=None, refined=None):
    """Measure the constants in ``int ||R-n||_C0 <= C1 + C2 * (Mabuchi length)``."""
    config = config or VerificationConfig()

    def measure(tr):
        I_R, _, q = _integral_with_tail(tr, "c0_R_minus_n")
        fit_R = rate_fit(tr, "c0_R_minus_n")
        tail_R = 0.0 if I_R == 0 else (q[-1] / -fit_R.rate if fit_R.ok and fit_R.rate < 0 else float("inf"))
        C1, _, _ = _integral_with_tail(tr, "c0_lap_u_tilde", 0.0, split)
        L = mabuchi_length(tr)
        fit_phi = rate_fit(tr, "c0_profile_dist")
        L_total = L.total
        return {
            "I_R": I_R + tail_R,
            "I_R_window": I_R,
            "I_R_tail": tail_R,
            "rate_R": fit_R.rate,
            "C1_emp": C1,
            "mabuchi": L_total,
            "C2_emp": (I_R + tail_R - C1) / L_total if L_total > 0 else None,
            "rate_profile": fit_phi.rate,
        }

    if not trace.complete:
        return LemmaReport("theorem_chain", INCONCLUSIVE, notes=["run did not complete"])
    if not trace.has(split):
        return LemmaReport("theorem_chain", INCONCLUSIVE, notes=[f"trace ends before t = {split}"])
    if trace.column("c0_R_minus_n").max() < config.noise_floor:
        return LemmaReport("theorem_chain", PASS,
                           constants={"I_R": 0.0, "mabuchi": 0.0, "C1_emp": 0.0},
                           notes=["curvature at the rounding floor throughout: integrals vanish"])
    m = measure(trace)
    if np.isnan(m["rate_R"]) or np.isnan(m["rate_profile"]):
        return LemmaReport("theorem_chain", INCONCLUSIVE, constants=m,
                           notes=["decay-rate window not reached"])
    finite = all(np.isfinite(m[k]) for k in ("I_R", "mabuchi"))
    converging = m["rate_R"] < 0 and m["rate_profile"] < 0
    verdict = PASS if (finite and converging) else FAIL
    deltas = {}
    if refined is not None:
        m2 = measure(refined)
        for k in ("I_R", "mabuchi", "C1_emp", "C2_emp"):
            if m[k] is not None and m2[k] is not None:
                deltas[k] = _rel_delta(m[k], m2[k])
        if deltas.get("C2_emp", 0.0) > config.refine_tol:
            verdict = FAIL
    notes = [] if converging else ["no negative fitted decay rate: not convergent"]
    return LemmaReport("theorem_chain", verdict, constants=m, deltas=deltas, notes=notes)


# ------------------------------------------------------------ driver


def verify_all(trace, config=None, refined=None, logsobolev_traces=None):
    """Every check that the trace supports, in a fixed order."""
    config = config or VerificationConfig()
    reports = [evolution_residuals(trace, config)]
    for kind in ("grad", "lap"):
        reports.append(lyapunov_scan(trace, kind, config=config))
    for fn in (ratio_grad, ratio_lap, ratio_smooth):
        reports.append(fn(trace, config, refined=refined))
    ls = calibrate_logsobolev(logsobolev_traces or [trace], config=config)
    reports.append(ls)
    for label in trace.companions:
        reports.append(heat_kernel_check(trace, label, config, refined=refined,
                                         t_range=config.check_range))
        if trace.has(1.0):
            reports.append(moser_trace(trace, label, 0.0, ls.constants["C_emp"], config))
    reports.append(supersolution_residual(trace, config))
    reports.append(min_scalar_monotone(trace, config))
    reports.append(pssw_small_monitor(trace, config=config, refined=refined))
    reports.append(theorem_chain(trace, config=config, refined=refined))
    return reports
