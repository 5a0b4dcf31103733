"""Command-line front end.

    qbm coefficients|decoherence-time|evolve-inverted|oracle|wigner [flags]

Parameters are merged from three layers, later ones winning: a built-in
preset (``--panel``), a YAML config file (``--config``) and command-line
flags.  Output goes to ``--out`` (stdout if omitted) as CSV or JSON; all
numbers are written with 12 significant digits.

Exit codes: 0 success, 1 bad configuration, 2 I/O failure, 3 ODE
integration failure, 4 quadrature failure.
"""
from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from functools import partial
from importlib import resources

import jsonschema
import numpy as np
import yaml

from . import __version__, coeffs, decoherence, gaussian, inverted, oracle
from .errors import ConfigurationError, ConvergenceError, DomainError, IntegrationError, QBMError
from .params import BathSpec, SystemSpec

log = logging.getLogger(__name__)

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_INTEGRATOR, EXIT_QUADRATURE = 0, 1, 2, 3, 4

COMMANDS = ("coefficients", "decoherence-time", "evolve-inverted", "oracle", "wigner")
COEFFICIENT_COLUMNS = ("delta_omega_sq", "gamma", "d_normal", "f_anom")
EVOLVE_COLUMNS = ("t", "a", "b", "c", "n", "width_2a_minus_c")
WIGNER_COLUMNS = ("x", "p", "w1", "w2", "w_int", "w_total")
ORACLE_COLUMNS = ("kind", "t", "closed", "oracle", "diff", "rel_diff", "error_bound", "within_tolerance")
DECOHERENCE_COLUMNS = ("label", "gamma0", "lambda_cut", "omega", "mass", "l0", "p0", "delta",
                       "t_d", "no_decoherence", "high_freq", "underdamped_bound", "macroscopic",
                       "regime_tag")

# oracle agreement: |diff| <= ORACLE_REL_TOL * max(|value|, ORACLE_FLOOR)
ORACLE_REL_TOL = 1e-6
ORACLE_FLOOR = 1e-2

# fig1 panels: (label, t_end)
FIG1_PANELS = (("a", 0.1), ("b", 0.1), ("c", 10.0), ("d", 10.0), ("e", 200.0), ("f", 200.0))

DEFAULTS = {
    "jobs": 1,
    "bath": {"gamma0": 0.05, "lambda_cut": 100.0},
    "system": {"omega": 1.0, "mass": 1.0, "orientation": "stable"},
    "superposition": {"l0": 1.0, "p0": 0.0, "delta": 1.0},
    "integrator": {"rel_tol": 1e-8, "abs_tol": 1e-10, "max_step": math.inf, "method": "DOP853"},
    "grid": {"points": 201, "spacing": "linear"},
    "decoherence": {"model": "late", "threshold": 1.0, "curve_points": 101},
    "ansatz": {"system": "hpz", "coefficients": "late", "warmup": "ramp"},
    "oracle": {"kind": "dissipation", "t": 1.0, "samples": 0, "seed": 0, "order": "nested"},
    "wigner": {"form": "envelope"},
    "output": {"meta": True},
}

FIG1 = {"bath": {"gamma0": 0.05, "lambda_cut": 100.0}, "system": {"omega": 1.0, "mass": 1.0}}

# preset name -> (commands it applies to, list of (label, overrides))
PRESETS = {
    "fig1": (("coefficients", "oracle"), [("fig1", FIG1)]),
    "fig3": (("evolve-inverted",), [("fig3", {
        "bath": {"gamma0": 0.01, "lambda_cut": 100.0},
        "system": {"omega": 1.0, "mass": 1.0, "orientation": "inverted"},
        "superposition": {"delta": 1.0},
        "grid": {"t_start": 0.0, "t_end": 30.0, "points": 301},
    })]),
    "high-freq": (("decoherence-time",), [("high_freq", {
        "bath": {"gamma0": 0.05, "lambda_cut": 100.0},
        "system": {"omega": 100.0, "mass": 1.0},
        "superposition": {"l0": 1.0},
    })]),
    "underdamped": (("decoherence-time",), [("underdamped", {
        "bath": {"lambda_cut": 100.0},
        "system": {"omega": 1.0, "mass": 1.0},
        "superposition": {"l0": 1.0},
        "decoherence": {"gamma0_sweep": [1e-3, 5e-3, 1e-2]},
    })]),
    "macroscopic": (("decoherence-time",), [("macroscopic", {
        "bath": {"gamma0": 0.05, "lambda_cut": 100.0},
        "system": {"omega": 1.0, "mass": 1.0},
        "superposition": {"l0": 10.0},
    })]),
}
PRESETS["regimes"] = (("decoherence-time",),
                      [case for name in ("high-freq", "underdamped", "macroscopic")
                       for case in PRESETS[name][1]])


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for key, val in over.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def _layer(base: dict, over: dict) -> dict:
    """Merge ``over`` into ``base``; a scalar gamma0 in ``over`` cancels a lower sweep."""
    out = _merge(base, over)
    if "gamma0" in over.get("bath", {}) and "gamma0_sweep" not in over.get("decoherence", {}):
        out.get("decoherence", {}).pop("gamma0_sweep", None)
    return out


def _schema(name):
    text = resources.files("qbm").joinpath("schemas", name).read_text(encoding="utf-8")
    return json.loads(text)


def load_config_file(path) -> dict:
    """Read and validate a YAML config file."""
    try:
        with open(path, encoding="utf-8") as fh:
            tree = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"{path}: not valid YAML: {exc}") from exc
    tree = {} if tree is None else tree
    try:
        jsonschema.validate(tree, _schema("config.schema.json"))
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigurationError(f"{path}: {where}: {exc.message}") from exc
    return tree


def _flag_tree(args) -> dict:
    """Config-shaped dict holding only the flags the user actually gave."""
    tree: dict = {}

    def put(section, key, val):
        if val is not None:
            tree.setdefault(section, {})[key] = val

    if args.gamma0 is not None:
        if len(args.gamma0) == 1:
            put("bath", "gamma0", args.gamma0[0])
        else:
            put("decoherence", "gamma0_sweep", args.gamma0)
    put("bath", "lambda_cut", args.lambda_cut)
    put("system", "omega", args.omega)
    put("system", "mass", args.mass)
    put("system", "orientation", args.orientation)
    put("superposition", "l0", args.l0)
    put("superposition", "p0", args.p0)
    put("superposition", "delta", args.delta)
    put("grid", "t_start", args.t_start)
    put("grid", "t_end", args.t_end)
    put("grid", "points", args.grid)
    put("grid", "spacing", args.spacing)
    put("output", "path", args.out)
    put("output", "format", args.format)
    if args.no_meta:
        put("output", "meta", False)
    if args.jobs is not None:
        tree["jobs"] = args.jobs
    put("decoherence", "model", args.model)
    put("decoherence", "threshold", args.threshold)
    put("ansatz", "system", args.ansatz)
    put("ansatz", "coefficients", args.coefficient_set)
    put("ansatz", "warmup", args.warmup)
    put("oracle", "kind", args.kind)
    put("oracle", "t", args.time)
    put("oracle", "samples", args.samples)
    put("oracle", "seed", args.seed)
    put("oracle", "order", args.order)
    put("wigner", "form", args.form)
    return tree


@dataclass
class RunConfig:
    """Fully merged parameters for one command."""

    command: str
    panel: str | None
    cases: list          # [(label, merged tree)]
    output_path: str | None
    output_format: str
    meta: bool
    jobs: int
    oracle_columns: bool = False


def build_config(args) -> RunConfig:
    file_tree = load_config_file(args.config) if args.config else {}
    flags = _flag_tree(args)
    panel = args.panel or file_tree.get("panel")
    if panel is not None:
        if panel not in PRESETS:
            raise ConfigurationError(f"unknown panel {panel!r}; choose from {sorted(PRESETS)}")
        allowed, cases = PRESETS[panel]
        if args.command not in allowed:
            raise ConfigurationError(f"panel {panel!r} applies to {', '.join(allowed)} only")
    else:
        cases = [(None, {})]
    merged = [(label, _layer(_layer(_merge(DEFAULTS, preset), file_tree), flags))
              for label, preset in cases]
    first = merged[0][1]
    out = first.get("output", {})
    fmt = out.get("format") or ("csv" if args.command in ("coefficients", "evolve-inverted", "wigner")
                                else "json")
    jobs = int(first.get("jobs", 1))
    if jobs < 1:
        raise ConfigurationError("--jobs must be >= 1")
    cfg = RunConfig(args.command, panel, merged, out.get("path"), fmt, bool(out.get("meta", True)),
                    jobs, bool(args.oracle))
    for _, tree in cfg.cases:
        _bath(tree), _system(tree)  # validate embedded specs before dispatch
    return cfg


def _bath(tree) -> BathSpec:
    b = tree["bath"]
    if "gamma0" not in b:
        raise ConfigurationError("gamma0 is not set")
    return BathSpec(float(b["gamma0"]), float(b["lambda_cut"]))


def _system(tree) -> SystemSpec:
    s = tree["system"]
    return SystemSpec(float(s["omega"]), float(s["mass"]), s.get("orientation", "stable"))


def _superposition(tree) -> decoherence.SuperpositionSpec:
    s = tree["superposition"]
    return decoherence.SuperpositionSpec(float(s["l0"]), float(s["p0"]), float(s["delta"]))


def _time_grid(grid: dict, t_end_default: float, t_start_default: float = 0.0) -> np.ndarray:
    t0 = float(grid.get("t_start", t_start_default))
    t1 = float(grid["t_end"]) if grid.get("t_end") is not None else t_end_default
    n = int(grid.get("points", 201))
    if n < 1:
        raise ConfigurationError("--grid must be >= 1")
    if t1 < t0:
        raise ConfigurationError(f"t_end = {t1} precedes t_start = {t0}")
    if n == 1 or t1 == t0:
        return np.array([t1 if n == 1 and t0 != t1 else t0])
    if grid.get("spacing", "linear") == "log":
        if t0 <= 0:
            raise ConfigurationError("log spacing needs t_start > 0")
        return np.geomspace(t0, t1, n)
    return np.linspace(t0, t1, n)


def _params_record(tree, *sections) -> dict:
    return {s: dict(tree[s]) for s in sections if s in tree}


# ---------------------------------------------------------------------------
# number formatting and writers
# ---------------------------------------------------------------------------

def fmt_number(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    return "%.12g" % (float(v) + 0.0)  # + 0.0 turns -0.0 into 0.0


def _json_value(v):
    """Round floats to 12 significant digits; non-finite values become null."""
    if isinstance(v, dict):
        return {k: _json_value(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_json_value(x) for x in v]
    if isinstance(v, np.ndarray):
        return [_json_value(x) for x in v.tolist()]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return float("%.12g" % (v + 0.0)) if math.isfinite(v) else None
    return v


def _meta(command, cfg: RunConfig) -> dict:
    stamp = datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
    return {"tool": "qbm", "version": __version__, "command": command,
            "panel": cfg.panel, "generated": stamp}


def render_csv(columns, rows, meta=None) -> str:
    buf = io.StringIO()
    if meta is not None:
        buf.write("# " + " ".join(f"{k}={v}" for k, v in meta.items()) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt_number(v) for v in row])
    return buf.getvalue()


def render_json(doc, schema_name) -> str:
    doc = _json_value(doc)
    jsonschema.validate(doc, _schema(schema_name))
    return json.dumps(doc, indent=2, sort_keys=False, allow_nan=False) + "\n"


def write_output(text: str, path):
    if path in (None, "-"):
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    log.info("wrote %s", path)


def _emit_table(cfg: RunConfig, columns, rows, params, summary=None):
    meta = _meta(cfg.command, cfg) if cfg.meta else None
    if cfg.output_format == "csv":
        text = render_csv(columns, rows, meta)
    else:
        doc = {"command": cfg.command, "params": params, "columns": list(columns),
               "rows": [list(r) for r in rows]}
        if summary is not None:
            doc["summary"] = summary
        if meta is not None:
            doc["meta"] = meta
        text = render_json(doc, "table.schema.json")
    write_output(text, cfg.output_path)


def _fan_out(fn, items, jobs):
    """Map ``fn`` over ``items`` keeping input order; a process pool when jobs > 1."""
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        chunk = max(1, len(items) // (4 * jobs))
        return list(pool.map(fn, items, chunksize=chunk))


# ---------------------------------------------------------------------------
# coefficients
# ---------------------------------------------------------------------------

_KINDS = (oracle.CoefficientKind.FREQ_SHIFT, oracle.CoefficientKind.DISSIPATION,
          oracle.CoefficientKind.NORMAL_DIFF, oracle.CoefficientKind.ANOMALOUS_DIFF)


def closed_form_row(t, sys_, bath):
    """(dW2, gamma, D, f) at t from the closed forms, without per-call warnings."""
    if sys_.inverted:
        s = coeffs.inverted_late(t, sys_, bath)
        return [s.delta_omega_sq, s.gamma, s.d_normal, s.f_anom]
    return [coeffs.delta_omega_sq(t, sys_, bath), coeffs.gamma_t(t, sys_, bath),
            coeffs.d_normal(t, sys_, bath), coeffs.f_anom(t, sys_, bath)]


def _coefficient_task(t, sys_, bath, with_oracle):
    row = closed_form_row(t, sys_, bath)
    if not with_oracle:
        return row
    orc = [oracle.coefficient_by_quadrature(k, t, sys_, bath).value for k in _KINDS]
    diff = max(abs(a - b) for a, b in zip(row, orc))
    return row + orc + [diff]


def cmd_coefficients(cfg: RunConfig):
    tree = cfg.cases[0][1]
    sys_, bath = _system(tree), _bath(tree)
    if not coeffs.weak_coupling_ok(sys_, bath):
        log.warning("gamma0/omega = %.3g exceeds the weak-coupling limit %.2g",
                    bath.gamma0 / sys_.omega, coeffs.WEAK_COUPLING_LIMIT)
    # the late inverted forms are meant for t beyond the memory time
    t_start_default = 1.0 / bath.lambda_cut if sys_.inverted else 0.0
    if cfg.panel == "fig1":
        points = [(label, t) for label, t_end in FIG1_PANELS
                  for t in _time_grid(dict(tree["grid"], t_start=0.0, t_end=t_end), t_end)]
    else:
        points = [(None, t) for t in _time_grid(tree["grid"], 10.0, t_start_default)]
    task = partial(_coefficient_task, sys_=sys_, bath=bath, with_oracle=cfg.oracle_columns)
    values = _fan_out(task, [float(t) for _, t in points], cfg.jobs)

    columns = ["t", *COEFFICIENT_COLUMNS]
    if cfg.oracle_columns:
        columns += [f"oracle_{c}" for c in COEFFICIENT_COLUMNS] + ["max_abs_diff"]
    if cfg.panel == "fig1":
        columns = ["panel", *columns]
        rows = [[label, t, *v] for (label, t), v in zip(points, values)]
    else:
        rows = [[t, *v] for (_, t), v in zip(points, values)]
    summary = None
    if cfg.oracle_columns:
        worst = max(v[-1] for v in values)
        summary = {"max_abs_diff": worst}
        log.info("max |closed - oracle| = %.3g", worst)
    _emit_table(cfg, columns, rows, _params_record(tree, "bath", "system", "grid"), summary)


# ---------------------------------------------------------------------------
# decoherence-time
# ---------------------------------------------------------------------------

def _regime_tag(sys_, bath, hf, mac, under_ok):
    if sys_.omega >= 0.5 * bath.lambda_cut and hf.in_regime:
        return "high_freq"
    if mac.in_regime:
        return "macroscopic"
    if under_ok:
        return "underdamped"
    return "none"


def decoherence_record(label, tree) -> dict:
    sys_, bath, sup = _system(tree), _bath(tree), _superposition(tree)
    dec = tree["decoherence"]
    model, threshold = dec["model"], float(dec["threshold"])
    fringe = decoherence.FringeConfig.frozen(sup)
    t_end = tree["grid"].get("t_end")
    if t_end is not None:
        t_max = float(t_end)
    elif bath.gamma0 > 0:
        t_max = 1.0 / bath.gamma0
    else:
        t_max = 10.0
    result = decoherence.decoherence_time(fringe, sys_, bath, sup, t_max, model, threshold)

    if bath.gamma0 > 0:
        hf = decoherence.td_high_frequency(sys_, bath, sup)
        mac = decoherence.td_macroscopic(sys_, bath, sup)
        bound = decoherence.td_underdamped_bound(bath)
    else:
        hf = mac = decoherence.RegimeEstimate(math.inf, False)
        bound = math.inf
    under_ok = bath.gamma0 <= 1e-2 * sys_.omega and bath.lambda_cut >= 50 * sys_.omega
    estimates = {
        "high_freq": {"value": hf.value, "in_regime": hf.in_regime, "detail": hf.detail},
        "underdamped_bound": {"value": bound, "in_regime": under_ok, "detail": {}},
        "macroscopic": {"value": mac.value, "in_regime": mac.in_regime, "detail": mac.detail},
    }
    tags = ["weak_coupling" if coeffs.weak_coupling_ok(sys_, bath) else "strong_coupling"]
    tags += [f"{k}_regime" for k, v in estimates.items() if v["in_regime"]]
    if result:
        t_d = float(result)
        if t_d < 1.0 / bath.lambda_cut:
            tags.append("inside_memory_time")
        nodec = None
        curve_end = min(2.0 * t_d, t_max if bath.gamma0 == 0 else min(t_max, 1.0 / bath.gamma0))
    else:
        t_d = None
        tags.append("no_decoherence")
        nodec = {"horizon": result.horizon, "a_int_at_horizon": result.a_int_at_horizon}
        curve_end = result.horizon
    curve = decoherence.evolve_a_int((0.0, curve_end), int(dec["curve_points"]), fringe,
                                     sys_, bath, sup, model)
    if curve.bound_crossing_time is not None:
        tags.append("a_max_exceeded")
    return {
        "label": label,
        "params": dict(_params_record(tree, "bath", "system", "superposition"),
                       model=model, threshold=threshold, t_max=t_max),
        "t_d": t_d,
        "no_decoherence": nodec,
        "regime_estimates": estimates,
        "regime_tag": _regime_tag(sys_, bath, hf, mac, under_ok),
        "validity_tags": tags,
        "a_int_curve": {"t": curve.times, "a_int": curve.a_int, "a_max": curve.a_max,
                        "bound_crossing_time": curve.bound_crossing_time},
    }


def _decoherence_task(item):
    label, tree = item
    return decoherence_record(label, tree)


def cmd_decoherence_time(cfg: RunConfig):
    items = []
    for label, tree in cfg.cases:
        sweep = tree["decoherence"].get("gamma0_sweep")
        if sweep:
            for g in sweep:
                items.append((label, _merge(tree, {"bath": {"gamma0": float(g)}})))
        else:
            items.append((label, tree))
    records = _fan_out(_decoherence_task, items, cfg.jobs)
    meta = _meta(cfg.command, cfg) if cfg.meta else None
    if cfg.output_format == "json":
        doc = {"command": cfg.command, "records": records}
        if meta is not None:
            doc["meta"] = meta
        text = render_json(doc, "decoherence.schema.json")
    else:
        rows = []
        for r in records:
            p = r["params"]
            est = r["regime_estimates"]
            rows.append([r["label"], p["bath"]["gamma0"], p["bath"]["lambda_cut"],
                         p["system"]["omega"], p["system"]["mass"], p["superposition"]["l0"],
                         p["superposition"]["p0"], p["superposition"]["delta"], r["t_d"],
                         r["no_decoherence"] is not None, est["high_freq"]["value"],
                         est["underdamped_bound"]["value"], est["macroscopic"]["value"],
                         r["regime_tag"]])
        text = render_csv(DECOHERENCE_COLUMNS, rows, meta)
    write_output(text, cfg.output_path)


# ---------------------------------------------------------------------------
# evolve-inverted
# ---------------------------------------------------------------------------

def _settling(t, width, frac=0.2):
    tail = t >= t[-1] - frac * (t[-1] - t[0])
    if np.count_nonzero(tail) < 2:
        return math.nan
    return float(np.max(np.abs(np.gradient(width[tail], t[tail]))))


def cmd_evolve_inverted(cfg: RunConfig):
    tree = cfg.cases[0][1]
    sys_, bath, sup = _system(tree), _bath(tree), _superposition(tree)
    if not sys_.inverted:
        log.info("evolve-inverted: forcing the inverted orientation")
        sys_ = SystemSpec(sys_.omega, sys_.mass, "inverted")
    grid = _time_grid(tree["grid"], 10.0)
    integ = tree["integrator"]
    icfg = inverted.IntegratorConfig(rel_tol=float(integ["rel_tol"]), abs_tol=float(integ["abs_tol"]),
                                     max_step=float(integ["max_step"]), t_end=float(grid[-1]),
                                     method=integ["method"])
    state0 = inverted.GaussianState.minimum_uncertainty(sup.delta)
    state0 = inverted.GaussianState(state0.a, state0.b, state0.c, state0.n, float(grid[0]))
    an = tree["ansatz"]
    traj = inverted.evolve(state0, sys_, bath, icfg, grid, an["system"], an["coefficients"],
                           an["warmup"])
    width = traj.width
    rows = [[t, a, b, c, n, w] for t, a, b, c, n, w in
            zip(traj.t, traj.a, traj.b, traj.c, traj.n, width)]
    slope = _settling(traj.t, width)
    summary = {"final_width": float(width[-1]), "min_width": float(np.min(width)),
               "max_abs_slope_final_20pct": slope,
               "settled": bool(math.isfinite(slope) and slope < 1e-3)}
    log.info("final 2a-C = %.6g, max |slope| over final 20%% = %.3g", width[-1], slope)
    params = dict(_params_record(tree, "bath", "superposition", "ansatz", "integrator"),
                  system={"omega": sys_.omega, "mass": sys_.mass, "orientation": "inverted"})
    _emit_table(cfg, EVOLVE_COLUMNS, rows, params, summary)


# ---------------------------------------------------------------------------
# oracle
# ---------------------------------------------------------------------------

def closed_form_value(kind, t, sys_, bath) -> float:
    kind = oracle.CoefficientKind(kind)
    if t == 0.0 and not sys_.inverted:
        return 0.0
    if sys_.inverted:
        s = coeffs.inverted_exact(t, sys_, bath) if t == 0.0 else coeffs.inverted_late(t, sys_, bath)
        row = [s.delta_omega_sq, s.gamma, s.d_normal, s.f_anom]
    else:
        row = closed_form_row(t, sys_, bath)
    return row[_KINDS.index(kind)]


def audit_one(kind, t, sys_, bath, order="nested") -> dict:
    closed = closed_form_value(kind, t, sys_, bath)
    res = oracle.coefficient_by_quadrature(kind, t, sys_, bath, order=order)
    diff = closed - res.value
    scale = max(abs(closed), abs(res.value), ORACLE_FLOOR)
    return {"kind": oracle.CoefficientKind(kind).value, "t": t, "closed": closed,
            "oracle": res.value, "diff": diff, "rel_diff": abs(diff) / scale,
            "error_bound": res.error, "within_tolerance": abs(diff) <= ORACLE_REL_TOL * scale}


def _audit_task(item, sys_, bath, order):
    kind, t = item
    return audit_one(kind, t, sys_, bath, order)


def cmd_oracle(cfg: RunConfig):
    tree = cfg.cases[0][1]
    sys_, bath = _system(tree), _bath(tree)
    oc = tree["oracle"]
    n = int(oc["samples"])
    if n > 0:
        rng = np.random.default_rng(int(oc["seed"]))
        kinds = rng.integers(0, len(_KINDS), size=n)
        times = np.exp(rng.uniform(math.log(1e-3), math.log(30.0), size=n))
        items = [(_KINDS[k].value, float(t)) for k, t in zip(kinds, times)]
    else:
        items = [(oracle.CoefficientKind(oc["kind"]).value, float(oc["t"]))]
    audits = _fan_out(partial(_audit_task, sys_=sys_, bath=bath, order=oc["order"]), items, cfg.jobs)
    summary = {"count": len(audits),
               "max_abs_diff": max(abs(a["diff"]) for a in audits),
               "max_rel_diff": max(a["rel_diff"] for a in audits),
               "all_within": all(a["within_tolerance"] for a in audits)}
    meta = _meta(cfg.command, cfg) if cfg.meta else None
    if cfg.output_format == "json":
        doc = {"command": cfg.command, "params": _params_record(tree, "bath", "system", "oracle"),
               "audits": audits, "summary": summary}
        if meta is not None:
            doc["meta"] = meta
        text = render_json(doc, "oracle.schema.json")
    else:
        text = render_csv(ORACLE_COLUMNS, [[a[c] for c in ORACLE_COLUMNS] for a in audits], meta)
    write_output(text, cfg.output_path)


# ---------------------------------------------------------------------------
# wigner
# ---------------------------------------------------------------------------

def cmd_wigner(cfg: RunConfig):
    tree = cfg.cases[0][1]
    sup = _superposition(tree)
    cat = gaussian.WignerCat.initial(sup, tree["wigner"]["form"])
    n = int(tree["grid"]["points"])
    xr = sup.l0 + 4.0 * sup.delta
    pr = abs(sup.p0) + 4.0 / sup.delta
    xs = np.linspace(-xr, xr, n) if n > 1 else np.zeros(1)
    ps = np.linspace(-pr, pr, n) if n > 1 else np.zeros(1)
    X, P = np.meshgrid(xs, ps, indexing="ij")
    w1, w2, wi = gaussian.wigner_components(X, P, cat)
    total = w1 + w2 + wi
    rows = np.column_stack([X.ravel(), P.ravel(), w1.ravel(), w2.ravel(), wi.ravel(), total.ravel()])
    summary = None
    if cat.form == "envelope":
        summary = {"a_int_from_peaks": gaussian.a_int_from_peaks(cat)}
    _emit_table(cfg, WIGNER_COLUMNS, rows.tolist(),
                _params_record(tree, "superposition", "wigner"), summary)


HANDLERS = {
    "coefficients": cmd_coefficients,
    "decoherence-time": cmd_decoherence_time,
    "evolve-inverted": cmd_evolve_inverted,
    "oracle": cmd_oracle,
    "wigner": cmd_wigner,
}


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _float_list(text):
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number or comma list, got {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _shared(p: argparse.ArgumentParser):
    g = p.add_argument_group("parameters")
    g.add_argument("--gamma0", type=_float_list, help="coupling; a comma list sweeps (decoherence-time)")
    g.add_argument("--lambda", dest="lambda_cut", type=float, help="bath cutoff frequency")
    g.add_argument("--omega", type=float, help="bare oscillator frequency")
    g.add_argument("--mass", type=float)
    g.add_argument("--orientation", choices=("stable", "inverted"))
    g.add_argument("--l0", type=float, help="half-separation of the two packets")
    g.add_argument("--p0", type=float, help="packet momentum")
    g.add_argument("--delta", type=float, help="packet width")
    g.add_argument("--t-start", type=float)
    g.add_argument("--t-end", type=float)
    g.add_argument("--grid", type=int, help="number of grid points (per axis for wigner)")
    g.add_argument("--spacing", choices=("linear", "log"))
    o = p.add_argument_group("run")
    o.add_argument("--panel", help="built-in preset: " + ", ".join(sorted(PRESETS)))
    o.add_argument("--config", help="YAML config file")
    o.add_argument("--out", help="output file (stdout if omitted)")
    o.add_argument("--format", choices=("csv", "json"))
    o.add_argument("--jobs", type=int, help="worker processes for sweeps")
    o.add_argument("--no-meta", action="store_true", help="omit the metadata header")
    o.add_argument("--oracle", action="store_true", help="append quadrature-oracle columns")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qbm", description=__doc__.split("\n\n")[0].strip())
    parser.add_argument("--version", action="version", version=f"qbm {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("coefficients", help="master-equation coefficients on a time grid")
    _shared(p)

    p = sub.add_parser("decoherence-time", help="time for the fringe exponent to reach 1")
    _shared(p)
    p.add_argument("--model", choices=[m.value for m in decoherence.RateModel])
    p.add_argument("--threshold", type=float)

    p = sub.add_parser("evolve-inverted", help="Gaussian state in the upside-down potential")
    _shared(p)
    p.add_argument("--ansatz", choices=[m.value for m in inverted.AnsatzSystem])
    p.add_argument("--coefficient-set", choices=[m.value for m in inverted.CoefficientSet])
    p.add_argument("--warmup", choices=[m.value for m in inverted.WarmUp])

    p = sub.add_parser("oracle", help="closed form against brute-force quadrature")
    _shared(p)
    p.add_argument("--kind", choices=[k.value for k in oracle.CoefficientKind])
    p.add_argument("--time", type=float, help="evaluation time")
    p.add_argument("--samples", type=int, help="random (kind, t) audits instead of one")
    p.add_argument("--seed", type=int)
    p.add_argument("--order", choices=("nested", "swapped"))

    p = sub.add_parser("wigner", help="initial two-packet Wigner function on a grid")
    _shared(p)
    p.add_argument("--form", choices=gaussian.INTERFERENCE_FORMS)

    # flags that only some subcommands define default to None everywhere
    for name in ("model", "threshold", "ansatz", "coefficient_set", "warmup", "kind", "time",
                 "samples", "seed", "order", "form"):
        for sp in sub.choices.values():
            if not any(a.dest == name for a in sp._actions):
                sp.set_defaults(**{name: None})
    return parser


def _setup_logging():
    level = os.environ.get("QBM_LOG", "warn").lower()
    levels = {"error": logging.ERROR, "warn": logging.WARNING, "warning": logging.WARNING,
              "info": logging.INFO, "debug": logging.DEBUG}
    logging.basicConfig(level=levels.get(level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    if level not in levels:
        log.warning("QBM_LOG=%r not recognised; using warn", level)


def main(argv=None) -> int:
    _setup_logging()
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        # argparse reports usage errors as 2, which is our I/O code
        return EXIT_CONFIG if exc.code == 2 else exc.code
    try:
        cfg = build_config(args)
        HANDLERS[cfg.command](cfg)
    except IntegrationError as exc:
        log.error("integration failed: %s", exc)
        return EXIT_INTEGRATOR
    except ConvergenceError as exc:
        log.error("quadrature did not converge: %s", exc)
        return EXIT_QUADRATURE
    except (ConfigurationError, DomainError) as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except QBMError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    except OSError as exc:
        log.error("I/O error: %s", exc)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
