"""Scenario files: the complete, hashable description of a run.

A scenario bundles everything the simulator needs (formation, obstacles,
field gains, controller gains, thresholds, timing) in one human-editable
JSON document. Serialization is canonical (sorted keys, repr floats), so a
scenario's sha256 hash is stable under key reordering and survives a
load/save round trip; that hash is stamped into every trace header.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from typing import Optional

import numpy as np

from .apf import ApfGains, Obstacle
from .formation import (
    HAND,
    Anchor,
    DroneRule,
    FormationSpec,
    LinkSpec,
    rhombus_formation,
    triangle_formation,
)
from .impedance import SaturationLimits, make_impedance_params

SCHEMA_VERSION = 1
DEFAULT_SAMPLE_TIME = 1.0 / 60.0

PRESET_NAMES = ("rhombus-4", "triangle-3-labyrinth")


class ScenarioError(ValueError):
    """Invalid scenario document; carries every violation found."""

    def __init__(self, violations: list):
        super().__init__("; ".join(violations))
        self.violations = list(violations)


@dataclass(frozen=True)
class PidGains:
    """Position-loop gains for one axis group, with output and windup clamps."""

    kp: float = 8.0
    kd: float = 5.0
    ki: float = 0.4
    a_max: float = 4.0
    integrator_limit: float = 1.0


@dataclass(frozen=True)
class Thresholds:
    theta: float = 0.10
    exit_margin: float = 0.02
    dead_band: float = 0.05
    direction_epsilon: float = 0.05
    cooldown_ms: float = 300.0


@dataclass(frozen=True)
class SimLimits:
    v_drone_max: float = 1.0
    d_min: float = 0.15


@dataclass(frozen=True)
class FinishRegion:
    center: tuple[float, float]
    radius: float


@dataclass
class Scenario:
    name: str
    formation: FormationSpec
    obstacles: list = field(default_factory=list)
    apf: ApfGains = field(default_factory=ApfGains)
    pid_xy: PidGains = field(default_factory=PidGains)
    pid_z: PidGains = field(default_factory=PidGains)
    limits: SimLimits = field(default_factory=SimLimits)
    thresholds: Thresholds = field(default_factory=Thresholds)
    sample_time: float = DEFAULT_SAMPLE_TIME
    start_hand: tuple[float, float, float] = (0.0, 0.0, 0.0)
    hand_trace: Optional[str] = None
    finish: Optional[FinishRegion] = None
    avoidance_enabled: bool = True
    schema_version: int = SCHEMA_VERSION

    def hash(self) -> str:
        return hashlib.sha256(canonical_json(scenario_to_dict(self)).encode("utf-8")).hexdigest()


# ---------------------------------------------------------------------------
# dict <-> object


def scenario_to_dict(sc: Scenario) -> dict:
    fm = sc.formation
    return {
        "schema_version": sc.schema_version,
        "name": sc.name,
        "sample_time": sc.sample_time,
        "formation": {
            "velocity_gain": fm.velocity_gain,
            "away_axis": fm.away_axis,
            "away_sign": fm.away_sign,
            "area_vertex_order": list(fm.area_vertex_order),
            "drones": [
                {
                    "anchor": {"kind": r.anchor.kind, "indices": list(r.anchor.indices)},
                    "offset": [float(v) for v in r.offset],
                }
                for r in fm.drones
            ],
            "links": [
                {
                    "source": l.source,
                    "target": l.target,
                    "mass": l.params.mass,
                    "damping": l.params.damping,
                    "stiffness": l.params.stiffness,
                    "limits": [l.limits.x, l.limits.y, l.limits.z],
                    "axis_signs": [float(v) for v in l.axis_signs],
                }
                for l in fm.links
            ],
        },
        "obstacles": [
            {"id": o.id, "center": [float(o.center[0]), float(o.center[1])],
             "radius": o.radius, "influence": o.influence}
            for o in sc.obstacles
        ],
        "apf": {
            "attractive": sc.apf.attractive,
            "repulsive": sc.apf.repulsive,
            "velocity_gain": sc.apf.velocity_gain,
            "max_speed": sc.apf.max_speed,
            "sum_all_obstacles": sc.apf.sum_all_obstacles,
        },
        "pid": {
            "xy": {"kp": sc.pid_xy.kp, "kd": sc.pid_xy.kd, "ki": sc.pid_xy.ki,
                   "a_max": sc.pid_xy.a_max, "integrator_limit": sc.pid_xy.integrator_limit},
            "z": {"kp": sc.pid_z.kp, "kd": sc.pid_z.kd, "ki": sc.pid_z.ki,
                  "a_max": sc.pid_z.a_max, "integrator_limit": sc.pid_z.integrator_limit},
        },
        "limits": {"v_drone_max": sc.limits.v_drone_max, "d_min": sc.limits.d_min},
        "thresholds": {
            "theta": sc.thresholds.theta,
            "exit_margin": sc.thresholds.exit_margin,
            "dead_band": sc.thresholds.dead_band,
            "direction_epsilon": sc.thresholds.direction_epsilon,
            "cooldown_ms": sc.thresholds.cooldown_ms,
        },
        "start": {"hand": [float(v) for v in sc.start_hand]},
        "hand_trace": sc.hand_trace,
        "finish": (None if sc.finish is None else
                   {"center": [float(sc.finish.center[0]), float(sc.finish.center[1])],
                    "radius": sc.finish.radius}),
        "avoidance_enabled": sc.avoidance_enabled,
    }


def _expect(doc: dict, key: str, kinds, violations: list, context: str):
    if key not in doc:
        violations.append(f"{context}: missing field {key!r}")
        return None
    value = doc[key]
    if kinds is not None and not isinstance(value, kinds):
        violations.append(f"{context}: field {key!r} has wrong type {type(value).__name__}")
        return None
    return value


def _number(doc: dict, key: str, violations: list, context: str, minimum=None,
            strict: bool = False):
    value = _expect(doc, key, (int, float), violations, context)
    if value is None or isinstance(value, bool):
        if isinstance(value, bool):
            violations.append(f"{context}: field {key!r} has wrong type bool")
        return None
    value = float(value)
    if not math.isfinite(value):
        violations.append(f"{context}: field {key!r} is not finite")
        return None
    if minimum is not None and (value <= minimum if strict else value < minimum):
        cmp = ">" if strict else ">="
        violations.append(f"{context}: field {key!r} must be {cmp} {minimum}, got {value}")
        return None
    return value


def scenario_violations(doc: dict) -> list:
    """Every schema problem in the document, not just the first."""
    v: list = []
    if not isinstance(doc, dict):
        return ["scenario document must be a JSON object"]
    version = _expect(doc, "schema_version", int, v, "scenario")
    if version is not None and version != SCHEMA_VERSION:
        v.append(f"scenario: unsupported schema_version {version}, expected {SCHEMA_VERSION}")
    _expect(doc, "name", str, v, "scenario")
    _number(doc, "sample_time", v, "scenario", minimum=0.0, strict=True)

    fm = _expect(doc, "formation", dict, v, "scenario")
    if fm is not None:
        _number(fm, "velocity_gain", v, "formation")
        drones = _expect(fm, "drones", list, v, "formation") or []
        links = _expect(fm, "links", list, v, "formation") or []
        for i, d in enumerate(drones):
            if not isinstance(d, dict):
                v.append(f"formation drone {i}: not an object")
                continue
            anchor = _expect(d, "anchor", dict, v, f"formation drone {i}")
            if anchor is not None:
                kind = _expect(anchor, "kind", str, v, f"formation drone {i} anchor")
                indices = _expect(anchor, "indices", list, v, f"formation drone {i} anchor")
                expected_n = {"hand": 0, "drone": 1, "midpoint": 2}.get(kind)
                if kind is not None and expected_n is None:
                    v.append(f"formation drone {i}: unknown anchor kind {kind!r}")
                elif indices is not None and expected_n is not None and len(indices) != expected_n:
                    v.append(f"formation drone {i}: anchor kind {kind!r} needs {expected_n} indices")
            offset = _expect(d, "offset", list, v, f"formation drone {i}")
            if offset is not None and len(offset) != 3:
                v.append(f"formation drone {i}: offset must have 3 components")
        for k, l in enumerate(links):
            if not isinstance(l, dict):
                v.append(f"formation link {k}: not an object")
                continue
            source = l.get("source")
            if source != HAND and not isinstance(source, int):
                v.append(f"formation link {k}: source must be \"hand\" or a drone index")
            if not isinstance(l.get("target"), int):
                v.append(f"formation link {k}: missing integer target")
            for key in ("mass", "damping", "stiffness"):
                _number(l, key, v, f"formation link {k}", minimum=0.0,
                        strict=(key != "damping"))
            lim = _expect(l, "limits", list, v, f"formation link {k}")
            if lim is not None and (len(lim) != 3 or any(
                    not isinstance(x, (int, float)) or x < 0 for x in lim)):
                v.append(f"formation link {k}: limits must be 3 nonnegative numbers")

    for i, o in enumerate(doc.get("obstacles", []) or []):
        ctx = f"obstacle {i}"
        if not isinstance(o, dict):
            v.append(f"{ctx}: not an object")
            continue
        _expect(o, "id", str, v, ctx)
        center = _expect(o, "center", list, v, ctx)
        if center is not None and len(center) != 2:
            v.append(f"{ctx}: center must have 2 components")
        radius = _number(o, "radius", v, ctx, minimum=0.0, strict=True)
        influence = _number(o, "influence", v, ctx) if "influence" in o else None
        if radius is not None and influence is not None and influence <= radius:
            v.append(f"{ctx}: influence distance {influence} must exceed radius {radius}")

    apf = _expect(doc, "apf", dict, v, "scenario")
    if apf is not None:
        for key in ("attractive", "repulsive", "velocity_gain", "max_speed"):
            _number(apf, key, v, "apf", minimum=0.0, strict=True)

    pid = _expect(doc, "pid", dict, v, "scenario")
    if pid is not None:
        for group in ("xy", "z"):
            g = _expect(pid, group, dict, v, "pid")
            if g is None:
                continue
            for key in ("kp", "kd", "ki"):
                _number(g, key, v, f"pid.{group}", minimum=0.0)
            _number(g, "a_max", v, f"pid.{group}", minimum=0.0, strict=True)
            _number(g, "integrator_limit", v, f"pid.{group}", minimum=0.0, strict=True)

    limits = _expect(doc, "limits", dict, v, "scenario")
    if limits is not None:
        _number(limits, "v_drone_max", v, "limits", minimum=0.0, strict=True)
        _number(limits, "d_min", v, "limits", minimum=0.0)

    th = _expect(doc, "thresholds", dict, v, "scenario")
    if th is not None:
        theta = _number(th, "theta", v, "thresholds", minimum=0.0, strict=True)
        margin = _number(th, "exit_margin", v, "thresholds", minimum=0.0)
        if theta is not None and margin is not None and margin >= theta:
            v.append(f"thresholds: exit_margin {margin} must be smaller than theta {theta}")
        _number(th, "dead_band", v, "thresholds", minimum=0.0)
        _number(th, "direction_epsilon", v, "thresholds", minimum=0.0)
        _number(th, "cooldown_ms", v, "thresholds", minimum=0.0)

    start = _expect(doc, "start", dict, v, "scenario")
    if start is not None:
        hand = _expect(start, "hand", list, v, "start")
        if hand is not None and len(hand) != 3:
            v.append("start: hand pose must have 3 components")

    finish = doc.get("finish")
    if finish is not None:
        if not isinstance(finish, dict):
            v.append("finish: not an object")
        else:
            center = _expect(finish, "center", list, v, "finish")
            if center is not None and len(center) != 2:
                v.append("finish: center must have 2 components")
            _number(finish, "radius", v, "finish", minimum=0.0, strict=True)

    if v:
        return v

    # structural checks that need constructed objects (graph reachability etc.)
    try:
        sc = _build_scenario(doc)
    except (ValueError, KeyError) as err:
        return [f"scenario: {err}"]
    return [f"formation: {p}" for p in sc.formation.validate()]


def _build_scenario(doc: dict) -> Scenario:
    fm = doc["formation"]
    drones = [
        DroneRule(
            anchor=Anchor(d["anchor"]["kind"], tuple(d["anchor"]["indices"])),
            offset=tuple(float(x) for x in d["offset"]),
        )
        for d in fm["drones"]
    ]
    links = [
        LinkSpec(
            source=l["source"],
            target=l["target"],
            params=make_impedance_params(l["mass"], l["damping"], l["stiffness"]),
            limits=SaturationLimits(*[float(x) for x in l["limits"]]),
            axis_signs=tuple(float(x) for x in l.get("axis_signs", (1.0, 1.0, 1.0))),
        )
        for l in fm["links"]
    ]
    formation = FormationSpec(
        drones=drones,
        links=links,
        velocity_gain=float(fm["velocity_gain"]),
        away_axis=int(fm.get("away_axis", 0)),
        away_sign=float(fm.get("away_sign", -1.0)),
        area_vertex_order=list(fm.get("area_vertex_order", [])),
    )
    obstacles = [
        Obstacle(o["id"], (float(o["center"][0]), float(o["center"][1])),
                 float(o["radius"]), float(o["influence"]) if "influence" in o else -1.0)
        for o in doc.get("obstacles", []) or []
    ]
    apf = ApfGains(
        attractive=float(doc["apf"]["attractive"]),
        repulsive=float(doc["apf"]["repulsive"]),
        velocity_gain=float(doc["apf"]["velocity_gain"]),
        max_speed=float(doc["apf"]["max_speed"]),
        sum_all_obstacles=bool(doc["apf"].get("sum_all_obstacles", False)),
    )

    def pid(group: dict) -> PidGains:
        return PidGains(kp=float(group["kp"]), kd=float(group["kd"]), ki=float(group["ki"]),
                        a_max=float(group["a_max"]),
                        integrator_limit=float(group["integrator_limit"]))

    finish = doc.get("finish")
    return Scenario(
        name=doc["name"],
        formation=formation,
        obstacles=obstacles,
        apf=apf,
        pid_xy=pid(doc["pid"]["xy"]),
        pid_z=pid(doc["pid"]["z"]),
        limits=SimLimits(v_drone_max=float(doc["limits"]["v_drone_max"]),
                         d_min=float(doc["limits"]["d_min"])),
        thresholds=Thresholds(
            theta=float(doc["thresholds"]["theta"]),
            exit_margin=float(doc["thresholds"]["exit_margin"]),
            dead_band=float(doc["thresholds"]["dead_band"]),
            direction_epsilon=float(doc["thresholds"]["direction_epsilon"]),
            cooldown_ms=float(doc["thresholds"]["cooldown_ms"]),
        ),
        sample_time=float(doc["sample_time"]),
        start_hand=tuple(float(x) for x in doc["start"]["hand"]),
        hand_trace=doc.get("hand_trace"),
        finish=(None if finish is None else
                FinishRegion(center=(float(finish["center"][0]), float(finish["center"][1])),
                             radius=float(finish["radius"]))),
        avoidance_enabled=bool(doc.get("avoidance_enabled", True)),
        schema_version=int(doc["schema_version"]),
    )


def scenario_from_dict(doc: dict) -> Scenario:
    violations = scenario_violations(doc)
    if violations:
        raise ScenarioError(violations)
    return _build_scenario(doc)


def canonical_json(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"), allow_nan=False)


def load_scenario(path: str) -> Scenario:
    with open(path, "r", encoding="utf-8") as f:
        doc = json.load(f)
    return scenario_from_dict(doc)


def save_scenario(sc: Scenario, path: str):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(canonical_json(scenario_to_dict(sc)) + "\n")


def load_preset(name: str) -> Scenario:
    """Loads one of the scenario files shipped inside the package."""
    if name not in PRESET_NAMES:
        raise ValueError(f"unknown preset {name!r}; available: {', '.join(PRESET_NAMES)}")
    text = resources.files("swarmguide").joinpath(f"presets/{name}.json").read_text("utf-8")
    return scenario_from_dict(json.loads(text))


# ---------------------------------------------------------------------------
# preset builders (used to generate the shipped JSON files)


def build_rhombus_preset() -> Scenario:
    return Scenario(name="rhombus-4", formation=rhombus_formation())


def build_labyrinth_preset() -> Scenario:
    """Three drones through a two-pillar slalom.

    The pillars sit directly on the flank drones' straight-line paths, so a
    run with avoidance disabled is guaranteed to penetrate; with avoidance on,
    the repulsive field must carry both flanks around their pillar.
    """
    return Scenario(
        name="triangle-3-labyrinth",
        formation=triangle_formation(),
        obstacles=[
            Obstacle("pillar-1", (2.5, 0.25), 0.15, 0.65),
            Obstacle("pillar-2", (4.0, -0.25), 0.15, 0.65),
        ],
        finish=FinishRegion(center=(5.5, 0.0), radius=0.5),
    )
