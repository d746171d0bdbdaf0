"""JSON configuration: schemas, presets and conversion to typed configs."""

from __future__ import annotations

import copy
import json
from pathlib import Path

import jsonschema

from ..exceptions import ConfigError
from ..fem import SimConfig
from ..preisach import LorentzianParams

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_POS_INT = {"type": "integer", "minimum": 1}


def _obj(properties: dict, required=()) -> dict:
    return {
        "type": "object",
        "properties": properties,
        "required": list(required),
        "additionalProperties": False,
    }


DENSITY_SCHEMA = {
    "oneOf": [
        _obj({"type": {"const": "lorentzian"}, "N": _POS, "omega": _POS, "gamma": _POS}, ["type"]),
        _obj({"type": {"const": "zero"}}, ["type"]),
    ]
}

SINE_SCHEMA = _obj(
    {
        "type": {"const": "sine"},
        "amplitude": _NUM,
        "offset": _NUM,
        "frequency": _POS,
        "periods": _POS,
        "samples_per_period": _POS_INT,
    },
    ["type", "amplitude", "frequency"],
)

TURNING_POINTS_SCHEMA = _obj(
    {
        "type": {"const": "turning_points"},
        "fractions": {"type": "array", "items": _NUM, "minItems": 2},
        "values": {"type": "array", "items": _NUM, "minItems": 2},
        "samples_per_segment": _POS_INT,
        "du": _POS,
    },
    ["type", "fractions", "values"],
)

RELAY_SCHEMA = _obj(
    {
        "signal": _obj(
            {
                "amplitude": _NUM,
                "offset": _NUM,
                "frequencies": {"type": "array", "items": _POS, "minItems": 1},
                "periods": _POS,
                "samples_per_period": _POS_INT,
            },
            ["amplitude", "frequencies"],
        ),
        "rho": {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2},
        "k": {"type": "array", "items": _POS, "minItems": 1},
        "xi": {"type": "number", "minimum": -1, "maximum": 1},
        "classical": {"type": "boolean"},
        "multiplier": {"type": "boolean"},
    },
    ["signal", "rho", "k", "xi"],
)

PREISACH_BLOCK = _obj(
    {"rho0": _POS, "n_triangle": _POS_INT, "density": DENSITY_SCHEMA, "k": _POS},
)

LOOP_SCHEMA = _obj(
    {
        "input": {"oneOf": [SINE_SCHEMA, TURNING_POINTS_SCHEMA]},
        "durations": {"type": "array", "items": _POS, "minItems": 1},
        "rho0": _POS,
        "n_triangle": _POS_INT,
        "density": DENSITY_SCHEMA,
        "k": {"type": "array", "items": _POS, "minItems": 1},
        "classical": {"type": "boolean"},
        "snapshot_fractions": {"type": "array", "items": {"type": "number", "minimum": 0, "maximum": 1}},
    },
    ["input", "k"],
)

_SIM_PROPERTIES = {
    "L": _POS,
    "n": _POS_INT,
    "sigma": _POS,
    "T": _POS,
    "steps": _POS_INT,
    "drive": _obj({"amplitude": _NUM, "frequency": _POS}),
    "preisach": PREISACH_BLOCK,
    "solver": _obj(
        {"tol": _POS, "max_iter": _POS_INT, "cg_tol": _POS, "fallback_iter": {"type": "integer", "minimum": 0}}
    ),
}

FIELD_SCHEMA = _obj(
    {
        **_SIM_PROPERTIES,
        "snapshots": {"type": "array", "items": {"type": "number", "minimum": 0}},
        "probes": {"type": "array", "items": {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2}},
        "export_mesh": {"type": "boolean"},
    }
)

CONVERGENCE_SCHEMA = _obj(
    {
        **_SIM_PROPERTIES,
        "mode": {"enum": ["space", "time"]},
        "levels": {"type": "array", "items": _POS_INT, "minItems": 2},
        "reference_level": _POS_INT,
    }
)

SCHEMAS = {
    "relay": RELAY_SCHEMA,
    "loop": LOOP_SCHEMA,
    "field": FIELD_SCHEMA,
    "convergence": CONVERGENCE_SCHEMA,
}

_SEC5 = {
    "L": 0.02,
    "sigma": 100.0,
    "T": 0.01,
    "drive": {"amplitude": 200.0, "frequency": 100.0},
    "solver": {"tol": 1e-8, "max_iter": 50, "cg_tol": 1e-10},
}

# Default loop input: a decaying oscillation with nested reversals
# at constant |du/dt|.  Samples fall on half-integers, half a unit away from the
# even-integer threshold lattice of the n=100, rho0=300 quadrature.
_STAND_IN_VALUES = [0.5, 250.5, -199.5, 150.5, -99.5, 75.5, -49.5, 0.5]
_STAND_IN_LENGTHS = [abs(b - a) for a, b in zip(_STAND_IN_VALUES[:-1], _STAND_IN_VALUES[1:])]
_STAND_IN_INPUT = {
    "type": "turning_points",
    "fractions": [sum(_STAND_IN_LENGTHS[:i]) / sum(_STAND_IN_LENGTHS) for i in range(len(_STAND_IN_VALUES))],
    "values": _STAND_IN_VALUES,
    "du": 1.0,
}

PRESETS: dict[str, dict[str, dict]] = {
    "relay": {
        "fig2-top": {
            "signal": {"amplitude": 200.0, "frequencies": [20.0], "periods": 1, "samples_per_period": 5000},
            "rho": [50.0, 100.0],
            "k": [1.0, 50.0, 1e8],
            "xi": -1.0,
            "classical": True,
        },
        "fig2-bottom": {
            "signal": {"amplitude": 200.0, "frequencies": [20.0], "periods": 1, "samples_per_period": 5000},
            "rho": [-50.0, 50.0],
            "k": [1.0, 50.0, 1e8],
            "xi": -1.0,
            "classical": True,
        },
        "fig3": {
            "signal": {"amplitude": 200.0, "frequencies": [50.0, 500.0, 5000.0], "periods": 1, "samples_per_period": 5000},
            "rho": [50.0, 100.0],
            "k": [50.0],
            "xi": -1.0,
        },
        "fig3-bottom": {
            "signal": {"amplitude": 200.0, "frequencies": [50.0, 500.0, 5000.0], "periods": 1, "samples_per_period": 5000},
            "rho": [-50.0, 50.0],
            "k": [50.0],
            "xi": -1.0,
        },
        "fig4-left": {
            "signal": {"amplitude": 150.0, "frequencies": [20.0], "periods": 1, "samples_per_period": 5000},
            "rho": [50.0, 100.0],
            "k": [5.0, 50.0],
            "xi": -0.5,
        },
        "fig4-right": {
            "signal": {"amplitude": 150.0, "offset": 75.0, "frequencies": [20.0], "periods": 1, "samples_per_period": 5000},
            "rho": [50.0, 100.0],
            "k": [5.0, 50.0],
            "xi": 0.5,
        },
    },
    "loop": {
        "fig7-left": {
            "input": _STAND_IN_INPUT,
            "durations": [0.0045],
            "rho0": 300.0,
            "n_triangle": 100,
            "density": {"type": "lorentzian", "N": 1 / 2000, "omega": 5.0, "gamma": 4.0},
            "k": [25.0, 200.0, 1e8],
            "classical": True,
            "snapshot_fractions": [0.001 / 0.0045, 0.003 / 0.0045, 1.0],
        },
        "fig7-right": {
            "input": _STAND_IN_INPUT,
            "durations": [4.5, 0.0045, 0.00045],
            "rho0": 300.0,
            "n_triangle": 100,
            "density": {"type": "lorentzian", "N": 1 / 2000, "omega": 5.0, "gamma": 4.0},
            "k": [100.0],
        },
    },
    "field": {
        "sec5-k1000": {
            **_SEC5,
            "n": 12,
            "steps": 128,
            "preisach": {"rho0": 300.0, "n_triangle": 40, "density": {"type": "lorentzian"}, "k": 1000.0},
            "snapshots": [0.002, 0.0055, 0.01],
            "probes": [[0.01, 0.01], [0.0, 0.01]],
            "export_mesh": True,
        },
        "sec5-k1": {
            **_SEC5,
            "n": 12,
            "steps": 128,
            "preisach": {"rho0": 300.0, "n_triangle": 40, "density": {"type": "lorentzian"}, "k": 1.0},
            "snapshots": [0.002, 0.0055, 0.01],
            "probes": [[0.01, 0.01], [0.0, 0.01]],
            "export_mesh": True,
        },
        "sec51": {
            **_SEC5,
            "n": 6,
            "steps": 128,
            "preisach": {"rho0": 300.0, "n_triangle": 20, "density": {"type": "lorentzian"}, "k": 10.0},
            "snapshots": [0.002, 0.0055, 0.01],
            "probes": [[0.01, 0.01]],
        },
    },
    "convergence": {
        "sec51-desk": {
            **_SEC5,
            "n": 6,
            "steps": 128,
            "preisach": {"rho0": 300.0, "n_triangle": 20, "density": {"type": "lorentzian"}, "k": 10.0},
            "mode": "space",
            "levels": [1, 2, 4],
            "reference_level": 8,
        },
        "sec51-full": {
            **_SEC5,
            "n": 6,
            "steps": 512,
            "preisach": {"rho0": 300.0, "n_triangle": 20, "density": {"type": "lorentzian"}, "k": 10.0},
            "mode": "space",
            "levels": [1, 2, 4],
            "reference_level": 15,
        },
        "sec51-time": {
            **_SEC5,
            "n": 6,
            "steps": 16,
            "preisach": {"rho0": 300.0, "n_triangle": 1, "density": {"type": "zero"}, "k": 10.0},
            "mode": "time",
            "levels": [1, 2, 4],
            "reference_level": 32,
        },
    },
}

DEFAULT_PRESET = {
    "relay": "fig2-top",
    "loop": "fig7-left",
    "field": "sec5-k1000",
    "convergence": "sec51-desk",
}


def deep_merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict) and "type" not in value:
            out[key] = deep_merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def validate(command: str, config: dict) -> dict:
    validator = jsonschema.Draft202012Validator(SCHEMAS[command])
    errors = sorted(validator.iter_errors(config), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        raise ConfigError(err.message, path=err.json_path)
    return config


def resolve(command: str, config_path: str | Path | None = None, preset: str | None = None) -> dict:
    """Preset (or the command default when no file is given) overlaid by the config file."""
    if command not in SCHEMAS:
        raise ConfigError(f"unknown command {command!r}")
    if preset is None and config_path is None:
        preset = DEFAULT_PRESET[command]
    base: dict = {}
    if preset is not None:
        try:
            base = PRESETS[command][preset]
        except KeyError:
            known = ", ".join(sorted(PRESETS[command]))
            raise ConfigError(f"unknown preset {preset!r} (known: {known})", path="--preset") from None
    override: dict = {}
    if config_path is not None:
        with open(config_path) as fh:
            try:
                override = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"invalid JSON: {exc}") from None
        if not isinstance(override, dict):
            raise ConfigError("configuration must be a JSON object")
    return validate(command, deep_merge(base, override))


def density_from(block: dict | None):
    """Returns LorentzianParams or None for the zero density."""
    block = block or {"type": "lorentzian"}
    if block["type"] == "zero":
        return None
    defaults = LorentzianParams()
    return LorentzianParams(
        N=block.get("N", defaults.N),
        omega=block.get("omega", defaults.omega),
        gamma=block.get("gamma", defaults.gamma),
    )


def sim_config_from(cfg: dict) -> SimConfig:
    defaults = SimConfig()
    pre = cfg.get("preisach", {})
    drive = cfg.get("drive", {})
    solver = cfg.get("solver", {})
    lorentzian = density_from(pre.get("density"))
    return SimConfig(
        L=cfg.get("L", defaults.L),
        n=cfg.get("n", defaults.n),
        sigma=cfg.get("sigma", defaults.sigma),
        T=cfg.get("T", defaults.T),
        steps=cfg.get("steps", defaults.steps),
        amplitude=drive.get("amplitude", defaults.amplitude),
        frequency=drive.get("frequency", defaults.frequency),
        rho0=pre.get("rho0", defaults.rho0),
        n_triangle=pre.get("n_triangle", defaults.n_triangle),
        density="zero" if lorentzian is None else "lorentzian",
        lorentzian=lorentzian or defaults.lorentzian,
        k=pre.get("k", defaults.k),
        tol=solver.get("tol", defaults.tol),
        max_iter=solver.get("max_iter", defaults.max_iter),
        cg_tol=solver.get("cg_tol", defaults.cg_tol),
        fallback_iter=solver.get("fallback_iter", defaults.fallback_iter),
    )
