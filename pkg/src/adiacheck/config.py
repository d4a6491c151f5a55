"""JSON config/report schemas and model construction from config."""
import copy

import jsonschema
import numpy as np

from .errors import ConfigInvalid
from .models import DualModel, LandauZenerModel, Schedule, SpinHalfModel, StaticModel

SCHEMA_VERSION = 1
MODES = ("simulate", "check", "dual", "sweep", "oracle")
SWEEPABLE = ("eta", "xi.constant", "t_max")

_number = {"type": "number"}
_schedule = {
    "oneOf": [
        {"type": "number", "minimum": 0},
        {
            "type": "object",
            "required": ["kind"],
            "properties": {"kind": {"enum": ["constant", "linear", "sinusoidal", "tabulated"]}},
            "allOf": [
                {
                    "if": {"properties": {"kind": {"const": "constant"}}},
                    "then": {"required": ["value"], "properties": {"value": _number}},
                },
                {
                    "if": {"properties": {"kind": {"const": "linear"}}},
                    "then": {"required": ["start", "slope"], "properties": {"start": _number, "slope": _number}},
                },
                {
                    "if": {"properties": {"kind": {"const": "sinusoidal"}}},
                    "then": {
                        "required": ["offset", "amplitude", "frequency"],
                        "properties": {"offset": _number, "amplitude": _number, "frequency": _number, "phase": _number},
                    },
                },
                {
                    "if": {"properties": {"kind": {"const": "tabulated"}}},
                    "then": {
                        "required": ["tau", "values"],
                        "properties": {
                            "tau": {"type": "array", "items": _number, "minItems": 4},
                            "values": {"type": "array", "items": _number, "minItems": 4},
                        },
                    },
                },
            ],
        },
    ]
}
_matrix = {"type": "array", "items": {"type": "array", "items": _number}, "minItems": 1}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["model", "grid"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "mode": {"enum": list(MODES)},
        "model": {
            "type": "object",
            "required": ["type"],
            "properties": {"type": {"enum": ["spin_half", "dual_of_spin_half", "landau_zener", "static"]}},
            "allOf": [
                {
                    "if": {"properties": {"type": {"enum": ["spin_half", "dual_of_spin_half"]}}},
                    "then": {
                        "required": ["eta", "xi"],
                        "properties": {"eta": {"type": "number", "exclusiveMinimum": 0}, "xi": _schedule, "horizon": {"type": "number", "exclusiveMinimum": 0}},
                    },
                },
                {
                    "if": {"properties": {"type": {"const": "landau_zener"}}},
                    "then": {
                        "required": ["sweep_rate", "coupling"],
                        "properties": {
                            "sweep_rate": _number,
                            "coupling": {"type": "number", "exclusiveMinimum": 0},
                            "center": _number,
                            "horizon": {"type": "number", "exclusiveMinimum": 0},
                        },
                    },
                },
                {
                    "if": {"properties": {"type": {"const": "static"}}},
                    "then": {
                        "required": ["matrix"],
                        "properties": {
                            "matrix": {
                                "oneOf": [
                                    _matrix,
                                    {"type": "object", "required": ["re"], "properties": {"re": _matrix, "im": _matrix}},
                                ]
                            }
                        },
                    },
                },
            ],
        },
        "grid": {
            "type": "object",
            "required": ["t_max", "steps"],
            "properties": {"t_max": {"type": "number", "exclusiveMinimum": 0}, "steps": {"type": "integer", "minimum": 8}},
            "additionalProperties": False,
        },
        "initial_level": {"type": "integer", "minimum": 0},
        "threshold": {"type": "number", "exclusiveMinimum": 1},
        "window": {"type": "array", "items": _number, "minItems": 2, "maxItems": 2},
        "outputs": {
            "type": "object",
            "properties": {"csv_path": {"type": "string"}, "json_path": {"type": "string"}},
            "additionalProperties": False,
        },
        "integrator": {
            "type": "object",
            "properties": {
                "method": {"enum": ["cfm4", "midpoint", "rk4"]},
                "tol": {"type": "number", "exclusiveMinimum": 0},
                "max_depth": {"type": "integer", "minimum": 1, "maximum": 20},
            },
            "additionalProperties": False,
        },
        "gap_floor": {"type": "number", "exclusiveMinimum": 0},
        "zero_floor": {"type": "number", "exclusiveMinimum": 0},
        "sweep": {
            "type": "object",
            "required": ["parameter"],
            "properties": {
                "parameter": {"enum": list(SWEEPABLE)},
                "values": {"type": "array", "items": _number, "minItems": 2},
                "range": {"type": "array", "items": _number, "minItems": 2, "maxItems": 2},
                "count": {"type": "integer", "minimum": 2},
                "spacing": {"enum": ["linear", "log"]},
            },
            "oneOf": [{"required": ["values"]}, {"required": ["range", "count"]}],
        },
    },
}

REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["schema_version", "tool_version", "mode", "config", "wall_time_s"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "tool_version": {"type": "string"},
        "mode": {"enum": list(MODES)},
        "config": {"type": "object"},
        "wall_time_s": {"type": "number", "minimum": 0},
        "survival": {
            "type": "object",
            "required": ["min", "final"],
            "properties": {"min": _number, "final": _number, "first_order_final": {"type": ["number", "null"]}},
        },
        "conditions": {
            "type": "object",
            "required": ["verdicts", "pairs", "threshold"],
            "properties": {
                "verdicts": {
                    "type": "object",
                    "additionalProperties": {"enum": ["pass", "fail", "inapplicable", "vacuous-pass"]},
                },
                "pairs": {"type": "array"},
            },
        },
        "oracle": {"type": "object"},
        "dual": {"type": "object"},
        "regime": {"enum": ["xi_dominant", "eta_dominant_small_area", "neither", None]},
        "sweep": {"type": "array"},
        "outputs": {"type": "object"},
    },
}


def validate_config(cfg):
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = ".".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigInvalid(f"config field '{where}': {exc.message}") from None
    if "window" in cfg:
        t0, t1 = cfg["window"]
        if not 0 <= t0 < t1 <= cfg["grid"]["t_max"]:
            raise ConfigInvalid("config field 'window': need 0 <= start < end <= grid.t_max")
    return cfg


def validate_report(report):
    jsonschema.validate(report, REPORT_SCHEMA)
    return report


def build_schedule(spec):
    if isinstance(spec, (int, float)):
        return Schedule.constant(float(spec))
    spec = dict(spec)
    kind = spec.pop("kind")
    return Schedule(kind, spec)


def build_model(model_cfg, t_max):
    """Model from its config block; ``horizon`` defaults to the grid's t_max."""
    kind = model_cfg["type"]
    horizon = float(model_cfg.get("horizon", t_max))
    if horizon < t_max:
        raise ConfigInvalid(f"config field 'model.horizon': {horizon} is shorter than grid.t_max {t_max}")
    try:
        if kind in ("spin_half", "dual_of_spin_half"):
            base = SpinHalfModel.build(model_cfg["eta"], build_schedule(model_cfg["xi"]), horizon)
            return base if kind == "spin_half" else DualModel(base)
        if kind == "landau_zener":
            center = float(model_cfg.get("center", 0.5 * horizon))
            return LandauZenerModel(model_cfg["sweep_rate"], model_cfg["coupling"], center, horizon)
        mat = model_cfg["matrix"]
        if isinstance(mat, dict):
            H = np.asarray(mat["re"], dtype=float) + 1j * np.asarray(mat.get("im", np.zeros_like(mat["re"])), dtype=float)
        else:
            H = np.asarray(mat, dtype=float)
        return StaticModel(H, horizon=horizon)
    except ConfigInvalid:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigInvalid(f"config field 'model': {exc}") from None


def base_spin_half(model_cfg, t_max):
    """The underlying spin-half model for spin_half / dual_of_spin_half configs."""
    if model_cfg["type"] not in ("spin_half", "dual_of_spin_half"):
        return None
    cfg = dict(model_cfg, type="spin_half")
    return build_model(cfg, t_max)


def sweep_values(sweep):
    if "values" in sweep:
        return [float(v) for v in sweep["values"]]
    lo, hi = sweep["range"]
    n = sweep["count"]
    if sweep.get("spacing", "linear") == "log":
        if lo <= 0 or hi <= 0:
            raise ConfigInvalid("config field 'sweep.range': log spacing needs positive bounds")
        return np.geomspace(lo, hi, n).tolist()
    return np.linspace(lo, hi, n).tolist()


def apply_sweep_value(cfg, parameter, value):
    cfg = copy.deepcopy(cfg)
    cfg.pop("sweep", None)
    if parameter == "eta":
        cfg["model"]["eta"] = value
    elif parameter == "xi.constant":
        if cfg["model"]["type"] not in ("spin_half", "dual_of_spin_half"):
            raise ConfigInvalid("config field 'sweep.parameter': xi.constant needs a spin-half model")
        cfg["model"]["xi"] = {"kind": "constant", "value": value}
    elif parameter == "t_max":
        cfg["grid"]["t_max"] = value
        cfg["model"].pop("horizon", None)
    return cfg
