"""
Sampled time series of a flow run and the quantities derived from it.
"""

from dataclasses import dataclass, field, fields
from functools import cached_property

import numpy as np

from .geometry import MetricProfile, snapshot, norms, DIM

__all__ = [
    "RECORD_FIELDS",
    "CSV_COLUMNS",
    "ObservableRecord",
    "Trace",
    "LengthReport",
    "RateFit",
    "record",
    "mabuchi_length",
    "calabi_length",
    "perelman_monitor",
    "rate_fit",
    "tail_coupling",
]

CSV_COLUMNS = (
    "t",
    "l2_u_tilde",
    "l2_grad_u_tilde",
    "l2_lap_u_tilde",
    "c0_u_tilde",
    "c0_grad_u_tilde",
    "c0_lap_u_tilde",
    "c0_R_minus_n",
    "a",
    "b",
    "min_R",
    "c0_profile_dist",
)

# CSV columns first, then the extra monitored quantities
RECORD_FIELDS = CSV_COLUMNS[1:] + (
    "l1_u_tilde",
    "l2_R_minus_n",
    "l2_u",
    "c0_u",
    "l2_lap_u",
)


@dataclass(frozen=True)
class ObservableRecord:
    t: float
    l2_u_tilde: float
    l2_grad_u_tilde: float
    l2_lap_u_tilde: float
    c0_u_tilde: float
    c0_grad_u_tilde: float
    c0_lap_u_tilde: float
    c0_R_minus_n: float
    a: float
    b: float
    min_R: float
    c0_profile_dist: float
    l1_u_tilde: float
    l2_R_minus_n: float
    l2_u: float
    c0_u: float
    l2_lap_u: float

    def as_row(self):
        return [getattr(self, name) for name in CSV_COLUMNS]


def record(state):
    """ObservableRecord for a flow state (anything with ``t`` and ``snapshot``)."""
    bundle = state.snapshot.norms
    return ObservableRecord(t=float(state.t), **{k: float(bundle[k]) for k in RECORD_FIELDS})


@dataclass(eq=False)
class Trace:
    """Records at a uniform cadence plus stored fields.

    ``phi`` and each companion array hold one row of node values per record.
    ``stencils`` are dicts with keys ``t_minus, t, t_plus, phi_minus, phi,
    phi_plus`` used for pointwise time derivatives.
    """

    grid: object
    cadence: float
    times: np.ndarray
    columns: dict
    phi: np.ndarray
    companions: dict = field(default_factory=dict)
    stencils: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)
    complete: bool = True
    message: str = ""

    def __len__(self):
        return len(self.times)

    @property
    def t_end(self):
        return float(self.times[-1])

    def index(self, t):
        """Index of the record at time ``t``; KeyError if ``t`` is not a sample."""
        k = int(round(t / self.cadence))
        if not 0 <= k < len(self.times) or abs(self.times[k] - t) > 1e-9:
            raise KeyError(f"no record at t = {t}")
        return k

    def has(self, t):
        try:
            self.index(t)
        except KeyError:
            return False
        return True

    def offset(self, i, dt):
        """Index of the record ``dt`` after record ``i`` (``dt`` a multiple of the cadence)."""
        return self.index(self.times[i] + dt)

    def column(self, name):
        if name == "t":
            return self.times
        return self.columns[name]

    def record(self, i):
        return ObservableRecord(t=float(self.times[i]),
                                **{k: float(self.columns[k][i]) for k in RECORD_FIELDS})

    @property
    def records(self):
        return [self.record(i) for i in range(len(self))]

    def profile(self, i):
        return MetricProfile(self.grid, self.phi[i])

    @cached_property
    def _snapshots(self):
        return {}

    def snapshot(self, i):
        if i not in self._snapshots:
            self._snapshots[i] = snapshot(self.profile(i))
        return self._snapshots[i]

    def companion_norms(self, label):
        """``(L1, C0)`` series of a companion field along the run."""
        data = self.companions[label]
        l1 = np.empty(len(data))
        c0 = np.empty(len(data))
        for i, f in enumerate(data):
            l1[i], _, c0[i] = norms(self.profile(i), f)
        return l1, c0

    def subsample(self, every):
        """Trace keeping every ``every``-th record (cadence multiplied by ``every``)."""
        sl = slice(None, None, every)
        cad = self.cadence * every
        return Trace(
            grid=self.grid,
            cadence=cad,
            times=self.times[sl],
            columns={k: v[sl] for k, v in self.columns.items()},
            phi=self.phi[sl],
            companions={k: v[sl] for k, v in self.companions.items()},
            stencils=list(self.stencils),
            metadata=dict(self.metadata, cadence=cad),
            complete=self.complete,
            message=self.message,
        )


@dataclass(frozen=True)
class RateFit:
    rate: float
    intercept: float
    residual: float
    n: int
    t_window: tuple

    @property
    def ok(self):
        return self.n >= 2 and np.isfinite(self.rate)


def _series(source, quantity):
    if isinstance(source, Trace):
        return source.times, source.column(quantity)
    t, q = source
    return np.asarray(t, dtype=float), np.asarray(q, dtype=float)


def rate_fit(source, quantity="l2_u_tilde", window=(1e-8, 1e-3),
             window_quantity="l2_u_tilde", t_range=None):
    """Least-squares slope of ``ln(quantity)`` against time.

    The fit uses samples where ``window_quantity`` lies inside ``window``
    (for ``(t, q)`` tuples the window applies to ``q`` itself). Returns a
    RateFit with ``n < 2`` and NaN rate when the window is empty.
    """
    t, q = _series(source, quantity)
    if isinstance(source, Trace):
        w = source.column(window_quantity)
    else:
        w = q
    mask = np.isfinite(q) & (q > 0)
    if window is not None:
        mask &= (w >= window[0]) & (w <= window[1])
    if t_range is not None:
        mask &= (t >= t_range[0] - 1e-12) & (t <= t_range[1] + 1e-12)
    n = int(mask.sum())
    if n < 2:
        return RateFit(float("nan"), float("nan"), float("nan"), n, (None, None))
    tt, yy = t[mask], np.log(q[mask])
    A = np.column_stack([tt, np.ones_like(tt)])
    (slope, icpt), *_ = np.linalg.lstsq(A, yy, rcond=None)
    resid = float(np.sqrt(np.mean((A @ [slope, icpt] - yy) ** 2)))
    return RateFit(float(slope), float(icpt), resid, n, (float(tt[0]), float(tt[-1])))


@dataclass(frozen=True)
class LengthReport:
    """Finite-window path length with a separately reported exponential tail.

    ``refinement_delta`` is the relative change expected from halving the
    sampling interval, estimated from the every-other-sample value.
    """

    name: str
    value: float
    tail: float
    u_variant: float
    window: tuple
    rule: str
    refinement_delta: float
    rate: float
    partial: bool

    @property
    def total(self):
        return self.value + self.tail


def _trapezoid(t, q):
    return float(np.trapezoid(q, t)) if hasattr(np, "trapezoid") else float(np.trapz(q, t))


def _length(trace, window, quantity, u_quantity, name, noise=1e-9):
    t0, t1 = window if window is not None else (0.0, trace.t_end)
    t1 = min(t1, trace.t_end)
    partial = not trace.complete
    i0, i1 = trace.index(t0), trace.index(t1)
    t = trace.times[i0:i1 + 1]
    q = trace.column(quantity)[i0:i1 + 1]
    value = _trapezoid(t, q)
    coarse = _trapezoid(t[::2], q[::2]) if (len(t) - 1) % 2 == 0 and len(t) > 2 else value
    # trapezoid error is O(h^2): halving the sampling interval moves the value
    # by a quarter of the fine-coarse gap
    delta = abs(value - coarse) / (4.0 * value) if value > 0 else 0.0
    fit = rate_fit(trace, quantity)
    if value == 0.0 or q[-1] <= noise:
        # already at the rounding floor, nothing left to extrapolate
        tail = 0.0
    elif fit.ok and fit.rate < 0:
        tail = float(q[-1] / -fit.rate)
    else:
        tail = float("inf")
    return LengthReport(
        name=name,
        value=value,
        tail=tail,
        u_variant=_trapezoid(t, trace.column(u_quantity)[i0:i1 + 1]),
        window=(float(t[0]), float(t[-1])),
        rule="trapezoid",
        refinement_delta=float(delta),
        rate=fit.rate,
        partial=partial,
    )


def mabuchi_length(trace, window=None):
    """Time integral of ``||u_tilde||_L2`` (the ``u`` variant is reported alongside)."""
    return _length(trace, window, "l2_u_tilde", "l2_u", "mabuchi")


def calabi_length(trace, window=None):
    """Time integral of ``||Lap u_tilde||_L2``; equal to the ``u`` variant up to rounding."""
    return _length(trace, window, "l2_lap_u_tilde", "l2_lap_u", "calabi")


def perelman_monitor(trace, tol=1e-6):
    """Sup of the C0 triple along the run and the min-R monotonicity check."""
    triple = trace.column("c0_u_tilde") + trace.column("c0_grad_u_tilde") + trace.column("c0_lap_u_tilde")
    triple_u = trace.column("c0_u") + trace.column("c0_grad_u_tilde") + trace.column("c0_lap_u_tilde")
    min_R = trace.column("min_R")
    floor = min(min_R[0], DIM) - tol
    bad = np.nonzero(min_R < floor)[0]
    i = int(np.argmax(triple))
    return {
        "sup_triple_u_tilde": float(triple[i]),
        "argmax_t": float(trace.times[i]),
        "sup_triple_u": float(triple_u.max()),
        "min_R_initial": float(min_R[0]),
        "min_R_overall": float(min_R.min()),
        "min_R_monotone": bool(bad.size == 0),
        "first_violation_t": float(trace.times[bad[0]]) if bad.size else None,
    }


def tail_coupling(trace, threshold=1e-6, offset=3.0, noise=1e-9):
    """Sup of ``||R-n||_C0(t+offset) / ||u_tilde||_L2(t)`` once ``||u_tilde||_L2 < threshold``.

    Samples whose numerator is below ``noise`` (the rounding plateau) are
    skipped. Returns ``(constant, n_samples)``; the constant is None when no
    sample qualifies.
    """
    den = trace.column("l2_u_tilde")
    num = trace.column("c0_R_minus_n")
    vals = []
    for i, t in enumerate(trace.times):
        if den[i] >= threshold or den[i] <= 0 or not trace.has(t + offset):
            continue
        j = trace.offset(i, offset)
        if num[j] >= noise:
            vals.append(num[j] / den[i])
    return (max(vals) if vals else None), len(vals)
