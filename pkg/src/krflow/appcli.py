"""
Command-line runner: run, verify, sweep, refine and report.

Artifacts of a run live in one directory under the output root
(``$KRFLOW_OUTPUT_ROOT``, default ``./runs``):

    trace.csv        sampled observables, fixed column order
    checkpoints.npz  node values of every record and stencil, grid metadata
    run.json         config echo, config hash, status, summary
    verify.json      lemma reports (written by ``verify``)
    timing.json      wall-clock only, kept apart so the others are reproducible

Exit codes: 0 success (warnings included), 1 usage or config error,
2 runtime abort.
"""

import argparse
import csv
import hashlib
import itertools
import json
import logging
import os
import re
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import fields
from pathlib import Path

import jsonschema
import numpy as np

from . import lemmas
from .flow import StepPolicy, evolve
from .geometry import (
    InvalidProfileError,
    beta_profile,
    chebyshev_profile,
    round_profile,
    validate_profile,
)
from .observables import CSV_COLUMNS, RECORD_FIELDS, Trace, calabi_length, mabuchi_length, perelman_monitor, rate_fit
from .specgrid import build_grid

log = logging.getLogger("krflow")

SCHEMA_VERSION = "krflow-run/1"
TRACE_SCHEMA = "trace.csv/1"
OUTPUT_ENV = "KRFLOW_OUTPUT_ROOT"

EXIT_OK, EXIT_USAGE, EXIT_ABORT = 0, 1, 2

_VERIFY_KEYS = sorted(f.name for f in fields(lemmas.VerificationConfig))

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["N", "t_max", "initial"],
    "properties": {
        "name": {"type": "string", "pattern": "^[A-Za-z0-9_.-]+$"},
        "N": {"type": "integer", "minimum": 8, "maximum": 1024},
        "t_max": {"type": "number", "exclusiveMinimum": 0},
        "policy": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "dt": {"type": ["number", "null"], "exclusiveMinimum": 0},
                "safety": {"type": "number", "exclusiveMinimum": 0},
                "filter_strength": {"type": ["number", "null"], "minimum": 0},
                "repin": {"type": "boolean"},
                "cadence": {"type": "number", "exclusiveMinimum": 0},
                "checkpoint_every": {"type": "number", "exclusiveMinimum": 0},
                "stencil": {"type": "number", "exclusiveMinimum": 0},
                "slope_tol": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "initial": {
            "type": "object",
            "required": ["family"],
            "additionalProperties": False,
            "properties": {
                "family": {"enum": ["round", "beta", "chebyshev-perturbation"]},
                "beta": {"type": "number"},
                "coeffs": {"type": "array", "items": {"type": "number"}},
                "amplitude": {"type": "number"},
                "parity": {"enum": ["even", "odd", "mixed"]},
                "modes": {"type": "integer", "minimum": 1, "maximum": 64},
                "seed": {"type": "integer", "minimum": 0},
            },
            "allOf": [
                {"if": {"properties": {"family": {"const": "beta"}}},
                 "then": {"required": ["beta"]}},
                {"if": {"properties": {"family": {"const": "chebyshev-perturbation"}},
                        "not": {"required": ["coeffs"]}},
                 "then": {"required": ["seed", "amplitude", "modes"]}},
            ],
        },
        "companions": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["label", "kind"],
                "additionalProperties": False,
                "properties": {
                    "label": {"type": "string"},
                    "kind": {"enum": ["constant", "linear", "bump", "cap"]},
                    "center": {"type": "number", "minimum": -1, "maximum": 1},
                    "width": {"type": "number", "exclusiveMinimum": 0},
                },
            },
        },
        "verification": {
            "type": "object",
            "additionalProperties": False,
            "properties": {k: {} for k in _VERIFY_KEYS},
        },
    },
}


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------- config


def _line_of(text, path):
    """Best-effort line number of the JSON element at ``path``."""
    pos = 0
    for key in path:
        if isinstance(key, str):
            hit = re.compile(re.escape(json.dumps(key)) + r"\s*:").search(text, pos)
            if hit is None:
                break
            pos = hit.start()
    return text.count("\n", 0, pos) + 1


def load_config(path):
    """Parse and validate a config file; returns ``(config, raw_bytes)``."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from None
    text = raw.decode("utf-8")
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from None
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(cfg), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        where = "/".join(str(p) for p in err.absolute_path) or "<root>"
        line = _line_of(text, list(err.absolute_path))
        raise ConfigError(f"{path}:{line}: {where}: {err.message}")
    cfg.setdefault("name", path.stem)
    return cfg, raw


def config_hash(raw):
    return hashlib.sha256(raw).hexdigest()


def build_policy(cfg):
    try:
        return StepPolicy(**cfg.get("policy", {}))
    except ValueError as exc:
        raise ConfigError(f"policy: {exc}") from None


def verification_config(cfg):
    opts = dict(cfg.get("verification", {}))
    if "eps_grid" in opts:
        opts["eps_grid"] = tuple(opts["eps_grid"])
    for key in ("check_range", "late_window"):
        if key in opts:
            opts[key] = tuple(opts[key])
    try:
        return lemmas.VerificationConfig(**opts)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"verification: {exc}") from None


def sampled_coefficients(modes, parity, amplitude, seed):
    """Chebyshev coefficients ``amplitude * U(-1, 1) / (k + 1)^2`` on the allowed parity."""
    rng = np.random.default_rng(seed)
    coeffs = np.zeros(modes)
    for k in range(modes):
        draw = rng.uniform(-1.0, 1.0)
        if parity == "mixed" or (k % 2 == 0) == (parity == "even"):
            coeffs[k] = amplitude * draw / (k + 1) ** 2
    return coeffs


def initial_profile(cfg, grid):
    init = cfg["initial"]
    fam = init["family"]
    if fam == "round":
        prof = round_profile(grid)
    elif fam == "beta":
        prof = beta_profile(grid, init["beta"])
    else:
        if "coeffs" in init:
            coeffs = np.asarray(init["coeffs"], float) * init.get("amplitude", 1.0)
        else:
            coeffs = sampled_coefficients(init["modes"], init.get("parity", "even"),
                                          init["amplitude"], init["seed"])
        prof = chebyshev_profile(grid, coeffs)
    verdict = validate_profile(prof)
    if not verdict:
        raise ConfigError(f"initial: {fam} data rejected: {verdict.reason} "
                          f"(magnitude {verdict.magnitude:.3e})")
    return prof


def companion_fields(cfg):
    out = []
    for spec in cfg.get("companions", []):
        kind = spec["kind"]
        c, w = spec.get("center", 0.9), spec.get("width", 0.1)
        if kind == "constant":
            fn = np.ones_like
        elif kind == "linear":
            fn = lambda x: 1.0 + x
        elif kind == "bump":
            fn = lambda x, c=c, w=w: np.exp(-(((x - c) / w) ** 2))
        else:
            fn = lambda x, w=w: np.exp(-(1.0 - x) / w)
        out.append((spec["label"], fn))
    return out


# ---------------------------------------------------------------- artifacts


def output_root():
    return Path(os.environ.get(OUTPUT_ENV, "runs"))


def write_trace_csv(trace, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for i, t in enumerate(trace.times):
            w.writerow([repr(float(t))] + [repr(float(trace.columns[c][i])) for c in CSV_COLUMNS[1:]])


def read_trace_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if tuple(rows[0]) != CSV_COLUMNS:
        raise ValueError(f"{path}: unexpected columns {rows[0]}")
    data = np.array(rows[1:], dtype=float).reshape(-1, len(CSV_COLUMNS))
    return {name: data[:, i] for i, name in enumerate(CSV_COLUMNS)}


def save_checkpoints(trace, path, filter_strength):
    arrays = {
        "N": np.array(trace.grid.N),
        "nodes": trace.grid.nodes,
        "filter_strength": np.array(np.nan if filter_strength is None else filter_strength),
        "cadence": np.array(trace.cadence),
        "times": trace.times,
        "phi": trace.phi,
        "complete": np.array(trace.complete),
        "companion_labels": np.array(list(trace.companions), dtype=str),
        "stencil_t": np.array([[s["t_minus"], s["t"], s["t_plus"]] for s in trace.stencils]).reshape(-1, 3),
        "stencil_phi": np.array([[s["phi_minus"], s["phi"], s["phi_plus"]] for s in trace.stencils])
        .reshape(-1, 3, trace.grid.size),
    }
    for name in RECORD_FIELDS:
        arrays[f"col_{name}"] = trace.columns[name]
    for i, lab in enumerate(trace.companions):
        arrays[f"companion_{i}"] = trace.companions[lab]
    np.savez(path, **arrays)


def load_trace(run_dir):
    """Rebuild a Trace from run artifacts on its native grid."""
    run_dir = Path(run_dir)
    meta = json.loads((run_dir / "run.json").read_text())
    with np.load(run_dir / "checkpoints.npz") as z:
        N = int(z["N"])
        fs = float(z["filter_strength"])
        grid = build_grid(N, filter_strength=None if np.isnan(fs) else fs)
        if not np.array_equal(grid.nodes, z["nodes"]):
            raise ValueError("stored nodes do not match the rebuilt grid")
        labels = [str(s) for s in z["companion_labels"]]
        stencils = [
            {"t_minus": t[0], "t": t[1], "t_plus": t[2],
             "phi_minus": p[0], "phi": p[1], "phi_plus": p[2]}
            for t, p in zip(z["stencil_t"], z["stencil_phi"])
        ]
        return Trace(
            grid=grid,
            cadence=float(z["cadence"]),
            times=z["times"],
            columns={name: z[f"col_{name}"] for name in RECORD_FIELDS},
            phi=z["phi"],
            companions={lab: z[f"companion_{i}"] for i, lab in enumerate(labels)},
            stencils=stencils,
            metadata=meta.get("metadata", {}),
            complete=bool(z["complete"]),
            message=meta.get("message", ""),
        )


def _dump(obj, path):
    Path(path).write_text(json.dumps(lemmas._jsonable(obj), indent=2, sort_keys=True) + "\n")


def summarize(trace):
    """Observables summary, lengths and monitors of a trace as a plain dict."""
    last = trace.record(len(trace) - 1)
    fit = rate_fit(trace)
    out = {
        "t_end": trace.t_end,
        "records": len(trace),
        "final": {k: getattr(last, k) for k in CSV_COLUMNS},
        "rate_l2_u_tilde": {"rate": fit.rate, "n": fit.n, "t_window": fit.t_window,
                            "residual": fit.residual},
        "perelman": perelman_monitor(trace),
    }
    for fn in (mabuchi_length, calabi_length):
        L = fn(trace)
        out[L.name] = {"value": L.value, "tail": L.tail, "total": L.total, "u_variant": L.u_variant,
                       "window": L.window, "rule": L.rule, "refinement_delta": L.refinement_delta,
                       "rate": L.rate, "partial": L.partial}
    return out


# ---------------------------------------------------------------- commands


def execute(cfg, raw, out_dir):
    """Run one config into ``out_dir``; returns ``(exit code, trace)``."""
    policy = build_policy(cfg)
    grid = build_grid(cfg["N"])
    prof = initial_profile(cfg, grid)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    try:
        trace = evolve(prof, policy, t_max=cfg["t_max"], companions=companion_fields(cfg),
                       metadata={"name": cfg["name"]})
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    wall = time.perf_counter() - start
    write_trace_csv(trace, out_dir / "trace.csv")
    save_checkpoints(trace, out_dir / "checkpoints.npz", policy.filter_strength)
    report = {
        "schema_version": SCHEMA_VERSION,
        "trace_schema": TRACE_SCHEMA,
        "config": cfg,
        "config_hash": config_hash(raw),
        "status": "complete" if trace.complete else "aborted",
        "partial": not trace.complete,
        "message": trace.message,
        "metadata": trace.metadata,
        "summary": summarize(trace),
    }
    _dump(report, out_dir / "run.json")
    _dump({"wall_clock_s": wall}, out_dir / "timing.json")
    return (EXIT_OK if trace.complete else EXIT_ABORT), trace


def cmd_run(args):
    cfg, raw = load_config(args.config)
    out = Path(args.out) if args.out else output_root() / cfg["name"]
    code, trace = execute(cfg, raw, out)
    state = "complete" if code == EXIT_OK else f"aborted at t = {trace.t_end:g}: {trace.message}"
    print(f"{cfg['name']}: {len(trace)} records, {state}; artifacts in {out}")
    return code


def run_verification(run_dir, refined_dir=None):
    run_dir = Path(run_dir)
    for name in ("run.json", "checkpoints.npz", "trace.csv"):
        if not (run_dir / name).exists():
            raise ConfigError(f"{run_dir}: missing artifact {name}")
    meta = json.loads((run_dir / "run.json").read_text())
    config = verification_config(meta["config"])
    trace = load_trace(run_dir)
    refined = load_trace(refined_dir) if refined_dir else None
    reports = lemmas.verify_all(trace, config, refined=refined)
    return trace, reports


def cmd_verify(args):
    trace, reports = run_verification(args.dir, args.refined)
    failures = [r.lemma for r in reports if r.verdict == lemmas.FAIL]
    warnings = [r.lemma for r in reports if r.verdict in (lemmas.INCONCLUSIVE, lemmas.HYPOTHESIS)]
    out = {
        "schema_version": SCHEMA_VERSION,
        "complete": trace.complete,
        "reports": [r.to_dict() for r in reports],
        "failures": failures,
        "warnings": warnings,
    }
    _dump(out, Path(args.dir) / "verify.json")
    for r in reports:
        print(f"{r.lemma:22s} {r.verdict}")
    if warnings:
        print(f"warning: inconclusive or hypothesis-violated: {', '.join(warnings)}")
    return EXIT_OK if not failures else EXIT_ABORT


def _set_path(cfg, dotted, value):
    node = cfg
    keys = dotted.split(".")
    for k in keys[:-1]:
        node = node.setdefault(k, {})
    node[keys[-1]] = value


def parse_grid(items):
    """``["initial.beta=0.05,0.1", ...]`` -> list of dicts (cartesian product)."""
    axes = []
    for item in items or []:
        key, sep, vals = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"--grid expects key=v1,v2,...; got {item!r}")
        values = [json.loads(v) for v in vals.split(",") if v.strip()]
        axes.append([(key, v) for v in values])
    if not axes or any(not a for a in axes):
        return []
    return [dict(combo) for combo in itertools.product(*axes)]


_SWEEP_COLUMNS = ("run", "status", "t_end", "final_c0_R_minus_n", "mabuchi", "calabi",
                  "rate_l2_u_tilde", "ratio_grad", "ratio_lap", "ratio_smooth",
                  "heat_kernel", "pssw_K", "sigma", "error")


def _sweep_one(job):
    idx, base, params, out_dir = job
    cfg = json.loads(json.dumps(base))
    for k, v in params.items():
        _set_path(cfg, k, v)
    cfg["name"] = f"{base['name']}-{idx:03d}"
    raw = json.dumps(cfg, sort_keys=True).encode()
    row = {"run": cfg["name"], **{f"param:{k}": v for k, v in params.items()}}
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
        code, trace = execute(cfg, raw, Path(out_dir) / cfg["name"])
        s = summarize(trace)
        reports = {r.lemma: r for r in lemmas.verify_all(trace, verification_config(cfg))}
        row.update(
            status="complete" if code == EXIT_OK else "aborted",
            t_end=s["t_end"],
            final_c0_R_minus_n=s["final"]["c0_R_minus_n"],
            mabuchi=s["mabuchi"]["total"],
            calabi=s["calabi"]["total"],
            rate_l2_u_tilde=s["rate_l2_u_tilde"]["rate"],
            ratio_grad=reports["ratio_grad"].constants.get("C_emp"),
            ratio_lap=reports["ratio_lap"].constants.get("C_emp"),
            ratio_smooth=reports["ratio_smooth"].constants.get("C_emp"),
            heat_kernel=reports["heat_kernel"].constants.get("C_emp") if "heat_kernel" in reports else None,
            pssw_K=reports["pssw_small"].constants.get("K_emp"),
            sigma=reports["evolution_residuals"].constants.get("sigma"),
        )
    except (ConfigError, jsonschema.ValidationError, InvalidProfileError, ValueError) as exc:
        row.update(status="invalid", error=str(exc).splitlines()[0])
    return row


def cmd_sweep(args):
    base, _ = load_config(args.template)
    combos = parse_grid(args.grid)
    out_dir = Path(args.out) if args.out else output_root() / f"{base['name']}-sweep"
    out_dir.mkdir(parents=True, exist_ok=True)
    jobs = [(i, base, p, out_dir) for i, p in enumerate(combos)]
    if args.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            rows = list(pool.map(_sweep_one, jobs))
    else:
        rows = [_sweep_one(j) for j in jobs]
    pcols = sorted({k for r in rows for k in r if k.startswith("param:")})
    cols = ["run"] + pcols + list(_SWEEP_COLUMNS[1:])
    with open(out_dir / "summary.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=cols, lineterminator="\n", restval="")
        w.writeheader()
        for r in rows:
            w.writerow({k: ("" if v is None else v) for k, v in r.items()})
    bad = sum(r["status"] != "complete" for r in rows)
    print(f"{len(rows)} runs, {bad} not complete; summary in {out_dir / 'summary.csv'}")
    return EXIT_OK


def _flatten(reports):
    flat = {}
    for r in reports:
        for group in ("constants", "residuals"):
            for k, v in getattr(r, group).items():
                if isinstance(v, (int, float, np.floating)) and not isinstance(v, bool):
                    flat[f"{r.lemma}.{k}"] = float(v)
    return flat


_ORDER_KEYS = {f"evolution_residuals.{k}" for k in
               ("u", "u_tilde", "u_tilde_sq", "grad_sq", "lap_plus", "lap_minus", "a_scalar")}


def cmd_refine(args):
    cfg, raw = load_config(args.config)
    levels = [int(v) for v in args.levels.split(",") if v.strip()]
    if len(levels) < 2:
        print("refine needs at least two levels", file=sys.stderr)
        return EXIT_USAGE
    out_dir = Path(args.out) if args.out else output_root() / f"{cfg['name']}-refine"
    base_policy = build_policy(cfg)
    per_level = []
    for k, N in enumerate(levels):
        lvl = json.loads(json.dumps(cfg))
        lvl["N"] = N
        pol = lvl.setdefault("policy", {})
        pol["stencil"] = base_policy.stencil / 2**k
        if base_policy.dt is not None:
            pol["dt"] = base_policy.dt / 2**k
        lvl["name"] = f"{cfg['name']}-N{N}"
        code, trace = execute(lvl, raw, out_dir / lvl["name"])
        if code != EXIT_OK:
            print(f"level N={N} aborted: {trace.message}", file=sys.stderr)
            return EXIT_ABORT
        reports = lemmas.verify_all(trace, verification_config(cfg))
        s = summarize(trace)
        values = _flatten(reports)
        values["mabuchi"] = s["mabuchi"]["total"]
        values["calabi"] = s["calabi"]["total"]
        values["rate_l2_u_tilde"] = s["rate_l2_u_tilde"]["rate"]
        values["final_c0_R_minus_n"] = s["final"]["c0_R_minus_n"]
        per_level.append({"N": N, "dt": pol.get("dt"), "stencil": pol["stencil"], "values": values})
    deltas, orders = [], []
    for a, b in zip(per_level, per_level[1:]):
        keys = sorted(set(a["values"]) & set(b["values"]))
        deltas.append({k: lemmas._rel_delta(a["values"][k], b["values"][k]) for k in keys})
        orders.append({
            k: float(np.log2(abs(a["values"][k]) / abs(b["values"][k])))
            for k in keys
            if k in _ORDER_KEYS and a["values"][k] > 0 and b["values"][k] > 0
        })
    _dump({"schema_version": SCHEMA_VERSION, "config_hash": config_hash(raw), "levels": per_level,
           "deltas": deltas, "orders": orders}, out_dir / "refine.json")
    print(f"{len(levels)} levels; refine.json in {out_dir}")
    return EXIT_OK


def cmd_report(args):
    run_dir = Path(args.dir)
    if not (run_dir / "run.json").exists():
        raise ConfigError(f"{run_dir}: missing artifact run.json")
    run = json.loads((run_dir / "run.json").read_text())
    verify = None
    if (run_dir / "verify.json").exists():
        verify = json.loads((run_dir / "verify.json").read_text())
    s = run["summary"]
    report = {
        "schema_version": SCHEMA_VERSION,
        "config": run["config"],
        "config_hash": run["config_hash"],
        "status": run["status"],
        "summary": s,
        "lemmas": verify["reports"] if verify else [],
    }
    if (run_dir / "timing.json").exists():
        report["wall_clock_s"] = json.loads((run_dir / "timing.json").read_text())["wall_clock_s"]
    _dump(report, run_dir / "report.json")
    print(f"run {run['config']['name']} ({run['status']}), t_end = {s['t_end']:g}")
    print(f"  final ||R - n||_C0     {s['final']['c0_R_minus_n']:.3e}")
    print(f"  decay rate ||u~||_L2   {s['rate_l2_u_tilde']['rate']:.4f}")
    print(f"  Mabuchi length         {s['mabuchi']['total']:.6f}")
    print(f"  Calabi length          {s['calabi']['total']:.6f}")
    if verify:
        for r in verify["reports"]:
            print(f"  {r['lemma']:22s} {r['verdict']}")
    else:
        print("  (no verify.json: run `verify` first for lemma reports)")
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="krflow", description=__doc__.split("\n\n")[0].strip())
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="evolve one config and write artifacts")
    r.add_argument("config")
    r.add_argument("--out", help="run directory (default: output root / config name)")
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("verify", help="run every lemma check on a run directory")
    v.add_argument("dir")
    v.add_argument("--refined", help="run directory of a refined rerun, for stability deltas")
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("sweep", help="run a template over a parameter grid")
    s.add_argument("template")
    s.add_argument("--grid", action="append", default=[],
                   help="dotted.key=v1,v2,... (repeat for a cartesian product)")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--out")
    s.set_defaults(func=cmd_sweep)

    f = sub.add_parser("refine", help="rerun at several resolutions and compare")
    f.add_argument("config")
    f.add_argument("--levels", required=True, help="comma-separated N values, e.g. 32,64")
    f.add_argument("--out")
    f.set_defaults(func=cmd_refine)

    rp = sub.add_parser("report", help="assemble report.json for a run directory")
    rp.add_argument("dir")
    rp.set_defaults(func=cmd_report)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
