"""``adiacheck <mode> --config path.json [--out dir]``.

Exit codes: 0 success, 2 invalid config, 3 numerical failure.
"""
import argparse
import json
import logging
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .conditions import align_dual, compare_dual_conditions, dual_gamma_residual, evaluate_conditions
from .config import (
    MODES,
    SCHEMA_VERSION,
    apply_sweep_value,
    base_spin_half,
    build_model,
    sweep_values,
    validate_config,
    validate_report,
)
from .dynamics import (
    build_m_series,
    first_order_survival,
    integrate_schrodinger,
    project_onto_adiabatic,
    survival_probability,
)
from .errors import ConfigInvalid, NumericalError
from .grid import TimeGrid
from .models import DualModel, SpinHalfModel
from .oracles import (
    SpinHalfClosedForm,
    regime_classify,
    spinhalf_exact_state,
    spinhalf_survival,
    spinhalf_transition,
)
from .spectral import adiabatic_orbits, analyze

log = logging.getLogger("adiacheck")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3
FLOAT_FMT = "{:.16e}"


def _fmt(x):
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return FLOAT_FMT.format(x)


def write_csv(path, header, columns):
    """Fixed-format CSV: 17 significant digits, one row per entry of the columns."""
    rows = len(columns[0])
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for k in range(rows):
            fh.write(",".join(c[k] if isinstance(c[k], str) else _fmt(c[k]) for c in columns) + "\n")


def _finite(obj):
    """Recursively replace NaN/inf with None and numpy scalars with Python ones."""
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    return obj


def _grid(cfg):
    return TimeGrid.uniform(cfg["grid"]["t_max"], cfg["grid"]["steps"])


def _window(cfg):
    return tuple(cfg["window"]) if "window" in cfg else None


def _check_level(cfg, model):
    m = cfg.get("initial_level", 0)
    if m >= model.dim:
        raise ConfigInvalid(f"config field 'initial_level': {m} >= model dim {model.dim}")
    return m


def simulate(model, grid, m, cfg):
    """Schrodinger run, adiabatic projection and first-order survival for one model."""
    analysis = analyze(model, grid, gap_floor=cfg.get("gap_floor", 1e-8), zero_floor=cfg.get("zero_floor", 1e-12))
    psi0 = analysis.frames.vectors[0, :, m]
    integ = cfg.get("integrator", {})
    traj = integrate_schrodinger(
        model, psi0, grid, method=integ.get("method", "cfm4"), tol=integ.get("tol", 1e-9), max_depth=integ.get("max_depth", 20)
    )
    c = project_onto_adiabatic(traj, adiabatic_orbits(analysis.frames, analysis.flow), m)
    P = survival_probability(c)
    P1 = first_order_survival(analysis.flow, m)
    return analysis, traj, P, P1


def series_columns(analysis, P, P1, m):
    flow = analysis.flow
    header = ["tau", "P_m", "P_m_first_order"]
    cols = [flow.tau, P, P1]
    for n in range(flow.dim):
        if n == m:
            continue
        header += [f"gamma_abs_{n}{m}", f"theta_{n}{m}", f"delta_{m}{n}"]
        cols += [np.abs(flow.gamma[:, n, m]), flow.theta[:, n, m], flow.delta[:, m, n]]
    for n in range(flow.dim):
        header.append(f"e_{n}")
        cols.append(flow.values[:, n])
    return header, cols


def spin_half_oracle(model, traj, P, m, grid):
    """Closed-form deltas for a spin-half run (None for other models)."""
    if not isinstance(model, SpinHalfModel):
        return None
    cf = SpinHalfClosedForm(model.params)
    sign = 1 if m == 1 else -1
    exact = spinhalf_exact_state(cf, sign, grid.points)
    fid = np.abs(np.einsum("ki,ki->k", np.conj(exact), traj.states)) ** 2
    return {
        "max_survival_error": float(np.max(np.abs(P - spinhalf_survival(cf, grid.points)))),
        "min_state_fidelity": float(np.min(fid)),
        "regime": regime_classify(cf),
    }


def _outputs(cfg, out_dir, mode):
    outs = cfg.get("outputs", {})
    base = Path(out_dir) if out_dir else Path(".")
    csv_path = Path(outs.get("csv_path", f"{mode}.csv"))
    json_path = Path(outs.get("json_path", f"{mode}.json"))
    if not csv_path.is_absolute():
        csv_path = base / csv_path
    if not json_path.is_absolute():
        json_path = base / json_path
    for p in (csv_path, json_path):
        p.parent.mkdir(parents=True, exist_ok=True)
    return csv_path, json_path


def _regime(cfg):
    model = base_spin_half(cfg["model"], cfg["grid"]["t_max"])
    if model is None:
        return None
    return regime_classify(SpinHalfClosedForm(model.params), _window(cfg), cfg.get("threshold", 10.0))


def _check_point(cfg):
    """Reduced check run used by sweeps: survival extremes, verdicts, regime."""
    grid = _grid(cfg)
    model = build_model(cfg["model"], grid.t_max)
    m = _check_level(cfg, model)
    analysis, traj, P, _ = simulate(model, grid, m, cfg)
    report = evaluate_conditions(analysis.flow, m, cfg.get("threshold", 10.0), _window(cfg))
    return {
        "min_P": float(np.min(P)),
        "final_P": float(P[-1]),
        "traditional": report.verdict("traditional"),
        "pointwise": report.verdict("pointwise"),
        "integral": report.verdict("integral"),
        "regime": _regime(cfg) or "n/a",
    }


def run(cfg, mode, out_dir=None):
    """Execute one mode; writes CSV and JSON, returns the report dict."""
    started = time.perf_counter()
    cfg = validate_config(cfg)
    if "mode" in cfg and cfg["mode"] != mode:
        raise ConfigInvalid(f"config field 'mode': config says {cfg['mode']!r}, command line says {mode!r}")
    if mode == "sweep":
        return run_sweep(cfg, out_dir, started)
    grid = _grid(cfg)
    model = build_model(cfg["model"], grid.t_max)
    m = _check_level(cfg, model)
    threshold = cfg.get("threshold", 10.0)
    csv_path, json_path = _outputs(cfg, out_dir, mode)
    report = {"schema_version": SCHEMA_VERSION, "tool_version": __version__, "mode": mode, "config": cfg}

    if mode == "oracle":
        base = base_spin_half(cfg["model"], grid.t_max)
        if base is None:
            raise ConfigInvalid("config field 'model.type': oracle mode needs a spin-half model")
        cf = SpinHalfClosedForm(base.params)
        tau = grid.points
        header = ["tau", "xi", "Omega", "mixing_angle", "delta", "P_closed", "transition_closed"]
        cols = [tau, cf.xi(tau), cf.omega(tau), cf.mixing_angle(tau), cf.delta(tau), spinhalf_survival(cf, tau), spinhalf_transition(cf, tau)]
        write_csv(csv_path, header, cols)
        P = cols[5]
        report["survival"] = {"min": float(np.min(P)), "final": float(P[-1]), "first_order_final": None}
        report["regime"] = regime_classify(cf, _window(cfg), threshold)
    elif mode in ("simulate", "check"):
        analysis, traj, P, P1 = simulate(model, grid, m, cfg)
        header, cols = series_columns(analysis, P, P1, m)
        write_csv(csv_path, header, cols)
        report["survival"] = {"min": float(np.min(P)), "final": float(P[-1]), "first_order_final": float(P1[-1])}
        report["integrator"] = {"method": traj.method, "depth": traj.depth, "refinement_delta": traj.refinement_delta}
        oracle = spin_half_oracle(model, traj, P, m, grid)
        if oracle is not None:
            report["oracle"] = oracle
        if mode == "check":
            cond = evaluate_conditions(analysis.flow, m, threshold, _window(cfg))
            report["conditions"] = cond.to_dict()
            report["regime"] = _regime(cfg)
    elif mode == "dual":
        base = base_spin_half(cfg["model"], grid.t_max)
        if base is None:
            raise ConfigInvalid("config field 'model.type': dual mode needs a spin-half base model")
        a = analyze(base, grid)
        b = align_dual(a, analyze(DualModel(base), grid))
        residual = dual_gamma_residual(a, b, aligned=True)
        rep_a = evaluate_conditions(a.flow, m, threshold, _window(cfg))
        rep_b = evaluate_conditions(b.flow, m, threshold, _window(cfg))
        comparison = compare_dual_conditions(rep_a, rep_b)
        _, traj, P, P1 = simulate(base, grid, m, cfg)
        header, cols = series_columns(a, P, P1, m)
        sel = grid.window(*(_window(cfg) or (0.0, grid.t_max)))
        for pa in rep_a.pairs:
            pb = rep_b.pair(pa.n)
            for name, series in (("ratio_a", pa.pointwise_ratio), ("ratio_b", pb.pointwise_ratio)):
                full = np.full(len(grid), np.nan)
                full[sel] = series
                header.append(f"{name}_{pa.n}{pa.m}")
                cols.append(full)
        write_csv(csv_path, header, cols)
        report["survival"] = {"min": float(np.min(P)), "final": float(P[-1]), "first_order_final": float(P1[-1])}
        report["conditions"] = rep_a.to_dict()
        report["dual"] = {
            "gamma_residual": residual,
            "conditions_b": rep_b.to_dict(),
            "comparison": comparison.to_dict(),
        }
    report["wall_time_s"] = time.perf_counter() - started
    report["outputs"] = {"csv_path": str(csv_path), "json_path": str(json_path)}
    report = _finite(report)
    validate_report(report)
    with open(json_path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
    return report


def _workers(n):
    try:
        cap = int(os.environ.get("ADIACHECK_WORKERS", "0"))
    except ValueError:
        cap = 0
    cap = cap if cap > 0 else (os.cpu_count() or 1)
    return max(1, min(cap, n))


def run_sweep(cfg, out_dir=None, started=None):
    """One CSV row per sweep value, in input order."""
    started = time.perf_counter() if started is None else started
    if "sweep" not in cfg:
        raise ConfigInvalid("config field 'sweep': required in sweep mode")
    sweep = cfg["sweep"]
    values = sweep_values(sweep)
    points = [validate_config(apply_sweep_value(cfg, sweep["parameter"], v)) for v in values]
    workers = _workers(len(points))
    if workers == 1:
        rows = [_check_point(p) for p in points]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_check_point, points))
    csv_path, json_path = _outputs(cfg, out_dir, "sweep")
    header = ["parameter", "value", "min_P", "final_P", "traditional", "pointwise", "integral", "regime"]
    cols = [
        [sweep["parameter"]] * len(values),
        values,
        [r["min_P"] for r in rows],
        [r["final_P"] for r in rows],
        [r["traditional"] for r in rows],
        [r["pointwise"] for r in rows],
        [r["integral"] for r in rows],
        [r["regime"] for r in rows],
    ]
    write_csv(csv_path, header, cols)
    report = {
        "schema_version": SCHEMA_VERSION,
        "tool_version": __version__,
        "mode": "sweep",
        "config": cfg,
        "sweep": [dict(value=v, **r) for v, r in zip(values, rows)],
        "wall_time_s": time.perf_counter() - started,
        "outputs": {"csv_path": str(csv_path), "json_path": str(json_path)},
    }
    report = _finite(report)
    validate_report(report)
    with open(json_path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
    return report


def main(argv=None):
    parser = argparse.ArgumentParser(prog="adiacheck", description="Adiabaticity checks for time-dependent quantum systems.")
    parser.add_argument("mode", choices=MODES)
    parser.add_argument("--config", required=True, help="path to the JSON experiment config")
    parser.add_argument("--out", default=None, help="directory for relative output paths")
    parser.add_argument("-v", "--verbose", action="store_true")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        with open(args.config) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"adiacheck: cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        report = run(cfg, args.mode, args.out)
    except ConfigInvalid as exc:
        print(f"adiacheck: invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"adiacheck: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    log.info("wrote %s and %s", report["outputs"]["csv_path"], report["outputs"]["json_path"])
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
