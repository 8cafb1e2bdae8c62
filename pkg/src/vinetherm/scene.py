"""Scene files: a strict YAML schema resolving to simulation objects.

Units are SI throughout (m, K, Pa, W/m^2, s); angles in the file are in
degrees.  Every key is checked against the schema below, unknown keys are
errors, and omitted optional keys take the listed defaults.  The resolved
mapping (defaults filled) is what run manifests echo.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import yaml

from . import engine, heatfield, kinematics, ppam, thermo
from .errors import SchemaError, ValidationError

REQUIRED = object()


_FLOAT_RE = re.compile(r"[-+]?(\d+\.?\d*|\.\d+)([eE][-+]?\d+)?")


def _num(value, path):
    # YAML 1.1 leaves exponents without a dot (1e4) as strings
    if isinstance(value, str) and _FLOAT_RE.fullmatch(value.strip()):
        value = float(value)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(f"expected a number, got {type(value).__name__}", key=path)
    if not math.isfinite(value):
        raise SchemaError("expected a finite number", key=path)
    return float(value)


def _int(value, path):
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaError(f"expected an integer, got {type(value).__name__}", key=path)
    return int(value)


def _str(value, path):
    if not isinstance(value, str):
        raise SchemaError(f"expected a string, got {type(value).__name__}", key=path)
    return value


def _point(value, path):
    if not isinstance(value, list) or len(value) != 2:
        raise SchemaError("expected a 2-element list [x, y]", key=path)
    return [_num(v, f"{path}[{i}]") for i, v in enumerate(value)]


def _polygon(value, path):
    if not isinstance(value, list) or len(value) < 3:
        raise SchemaError("expected a list of at least 3 [x, y] vertices", key=path)
    return [_point(v, f"{path}[{i}]") for i, v in enumerate(value)]


def _optional_num(value, path):
    return None if value is None else _num(value, path)


HEATER = {
    "position": (_point, REQUIRED),
    "ref_flux": (_num, REQUIRED),
    "ref_distance": (_num, 0.5),
    "surface_temp": (_num, 900.0),
    "decay_rate": (_num, 0.0),
}
OCCLUDER = {
    "polygon": (_polygon, REQUIRED),
    "transmissivity": (_num, 0.0),
}
VAPOR = {
    "type": (_str, "clausius-clapeyron"),
    # clausius-clapeyron
    "enthalpy": (_num, thermo.NOVEC7000_HVAP),
    "T_ref": (_num, thermo.NOVEC7000_BOILING_K),
    "P_ref": (_num, thermo.P_ATM),
    # antoine
    "A": (_optional_num, None),
    "B": (_optional_num, None),
    "C": (_optional_num, None),
    "T_min": (_num, 200.0),
    "T_max": (_num, thermo.VAPOR_T_MAX),
}
SCHEMA = {
    "scene": {
        "heaters": ([HEATER], REQUIRED),
        "occluders": ([OCCLUDER], []),
        "ambient": (_num, 293.15),
        "decay_model": (_str, "inverse-square"),
    },
    "robot": {
        "spine": {
            "gauge_pressure": (_num, REQUIRED),
            "layflat_width": (_num, REQUIRED),
        },
        "actuator": {
            "fiber_length": (_num, 0.030),
            "constriction_radius": (_num, 0.003),
            "layflat_width": (_num, 0.045),
            "pouches_per_spam": (_int, 5),
        },
        "fluid": {
            "vapor_model": VAPOR,
            "n_air": (_num, 0.0),
            "fill_volume": (_num, 1.5e-6),
            "boiling_point_ref": (_num, thermo.NOVEC7000_BOILING_K),
            "dead_volume": (_num, 2e-6),
            "max_volume": (_num, 30e-6),
        },
        "chain": {
            "l0": (_num, 0.041),
            "d": (_num, 0.050),
        },
        "thermal": {
            "area": (_num, 4.5e-2 * 3.7e-2),
            "emissivity": (_num, 0.9),
            "absorptivity": (_num, 0.9),
            "loss_coeff": (_num, 10.0),
            "mode": (_str, "reradiating"),
        },
        "base": {
            "position": (_point, [0.0, 0.0]),
            "heading_deg": (_num, 0.0),
        },
        "growth": {
            "rate": (_num, 0.005),
            "initial_segments": (_int, 1),
            "max_segments": (_int, 500),
        },
        "shading": (_num, 0.2),
        "thermal_tau": (_num, 0.0),
        "angle_model": (_str, "constant-curvature"),
    },
    "sim": {
        "dt": (_num, REQUIRED),
        "t_end": (_num, REQUIRED),
        "sample_every": (_int, 1),
    },
}


# ---------------------------------------------------------------------------
# YAML with line numbers

def _compose(text):
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise SchemaError(f"malformed YAML: {getattr(exc, 'problem', exc)}",
                          line=mark.line + 1 if mark else None) from None
    if node is None:
        raise SchemaError("scene file is empty")
    return node


def _plain(node, path, lines):
    """Convert a YAML node to Python values, recording the line of every key path."""
    lines[path] = node.start_mark.line + 1
    if isinstance(node, yaml.MappingNode):
        out = {}
        for key_node, value_node in node.value:
            key = key_node.value
            sub = f"{path}.{key}" if path else key
            if key in out:
                raise SchemaError("duplicate key", key=sub, line=key_node.start_mark.line + 1)
            out[key] = _plain(value_node, sub, lines)
            lines[sub] = key_node.start_mark.line + 1
        return out
    if isinstance(node, yaml.SequenceNode):
        return [_plain(v, f"{path}[{i}]", lines) for i, v in enumerate(node.value)]
    return _scalar(node)


def _scalar(node):
    loader = yaml.SafeLoader("")
    try:
        return loader.construct_object(node, deep=True)
    finally:
        loader.dispose()


def _resolve(schema, data, path, lines):
    if not isinstance(data, dict):
        raise SchemaError("expected a mapping", key=path or "<root>", line=lines.get(path))
    for key in data:
        if key not in schema:
            sub = f"{path}.{key}" if path else key
            raise SchemaError("unknown key", key=sub, line=lines.get(sub))
    out = {}
    for key, spec in schema.items():
        sub = f"{path}.{key}" if path else key
        if isinstance(spec, dict):
            out[key] = _resolve(spec, data.get(key, {}), sub, lines)
            continue
        conv, default = spec
        if key not in data:
            if default is REQUIRED:
                raise SchemaError("required key missing", key=sub, line=lines.get(path))
            out[key] = [dict(x) for x in default] if isinstance(default, list) and default and isinstance(default[0], dict) else default
            continue
        value = data[key]
        try:
            if isinstance(conv, list):
                if not isinstance(value, list):
                    raise SchemaError("expected a list", key=sub)
                out[key] = [_resolve(conv[0], item, f"{sub}[{i}]", lines) for i, item in enumerate(value)]
            else:
                out[key] = conv(value, sub)
        except SchemaError as exc:
            if exc.line is None:
                raise SchemaError(exc.message, key=exc.key or sub, line=lines.get(exc.key or sub)) from None
            raise
    return out


# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SimParams:
    dt: float
    t_end: float
    sample_every: int = 1

    def __post_init__(self):
        if not self.dt > 0:
            raise ValidationError("sim.dt must be positive")
        if not self.t_end >= self.dt:
            raise ValidationError("sim.t_end must be at least one time step")
        if self.sample_every < 1:
            raise ValidationError("sim.sample_every must be >= 1")


@dataclass(frozen=True)
class Scene:
    heat: heatfield.HeatScene
    robot: engine.RobotConfig
    sim: SimParams
    resolved: dict[str, Any]


def _vapor_model(spec):
    kind = spec["type"]
    if kind == "clausius-clapeyron":
        return thermo.ClausiusClapeyron(spec["enthalpy"], spec["T_ref"], spec["P_ref"],
                                        spec["T_min"], spec["T_max"])
    if kind == "antoine":
        missing = [k for k in ("A", "B", "C") if spec[k] is None]
        if missing:
            raise SchemaError("antoine model needs A, B and C",
                              key=f"robot.fluid.vapor_model.{missing[0]}")
        return thermo.Antoine(spec["A"], spec["B"], spec["C"], spec["T_min"], spec["T_max"])
    raise SchemaError(f"unknown vapor model type {kind!r}", key="robot.fluid.vapor_model.type")


def _build(r):
    sc = r["scene"]
    heat = heatfield.HeatScene(
        [heatfield.Heater(tuple(h["position"]), h["ref_flux"], h["ref_distance"],
                          h["surface_temp"], h["decay_rate"]) for h in sc["heaters"]],
        [heatfield.Occluder(o["polygon"], o["transmissivity"]) for o in sc["occluders"]],
        sc["ambient"],
        sc["decay_model"],
    )
    rb = r["robot"]
    fl = rb["fluid"]
    fluid = thermo.FluidState(
        _vapor_model(fl["vapor_model"]), fl["n_air"], fl["fill_volume"],
        fl["boiling_point_ref"], fl["dead_volume"], fl["max_volume"],
    )
    th = rb["thermal"]
    cfg = engine.RobotConfig(
        spine=kinematics.SpineConfig(**rb["spine"]),
        actuator=ppam.ActuatorGeometry(**rb["actuator"]),
        fluid=fluid,
        chain=kinematics.ChainGeometry(**rb["chain"]),
        thermal=thermo.ThermalNode(th["area"], th["emissivity"], th["absorptivity"], th["loss_coeff"],
                                   temperature=sc["ambient"]),
        thermal_mode=th["mode"],
        base_position=tuple(rb["base"]["position"]),
        base_heading=math.radians(rb["base"]["heading_deg"]),
        growth_rate=rb["growth"]["rate"],
        shading_factor=rb["shading"],
        thermal_tau=rb["thermal_tau"],
        initial_segments=rb["growth"]["initial_segments"],
        max_segments=rb["growth"]["max_segments"],
        angle_model=rb["angle_model"],
    )
    return heat, cfg, SimParams(**r["sim"])


def parse_scene_text(text: str) -> Scene:
    lines: dict[str, int] = {}
    data = _plain(_compose(text), "", lines)
    resolved = _resolve(SCHEMA, data, "", lines)
    heat, cfg, sim = _build(resolved)
    return Scene(heat, cfg, sim, resolved)


def parse_scene(path) -> Scene:
    """Load and fully validate a scene file.

    Schema problems raise :class:`SchemaError` naming the key path and line;
    broken module invariants surface as :class:`ValidationError`.
    """
    return parse_scene_text(Path(path).read_text(encoding="utf-8"))
