"""JSON robot/scenario files, their strict parsers, and shipped templates."""
from __future__ import annotations

import json
from pathlib import Path
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator
from scipy.spatial.transform import Rotation

from .collide import CollisionWorld, ObstacleSphere, RobotSphere
from .nlp import SolverOptions
from .ocp import DEFAULT_TF_GUESS, Scenario
from .robodyn import RobotModel

__all__ = [
    "ConfigError",
    "RobotFile",
    "ScenarioFile",
    "load_robot",
    "load_scenario",
    "parse_robot",
    "parse_scenario",
    "robot_to_dict",
    "template",
]


class ConfigError(ValueError):
    """Malformed or inconsistent configuration input."""


Vec3 = tuple[float, float, float]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class Origin(_Strict):
    xyz: Vec3 = (0.0, 0.0, 0.0)
    rpy: Optional[Vec3] = None
    quat: Optional[tuple[float, float, float, float]] = None

    @field_validator("quat")
    @classmethod
    def _unit(cls, q):
        if q is not None and abs(np.linalg.norm(q) - 1.0) > 1e-6:
            raise ValueError("quaternion must have unit norm")
        return q


class Friction(_Strict):
    viscous: float = Field(0.0, ge=0)
    coulomb: float = Field(0.0, ge=0)


class Joint(_Strict):
    name: Optional[str] = None
    parent: int
    origin: Origin = Origin()
    axis: Vec3
    mass: float = Field(gt=0)
    com: Vec3
    inertia: tuple[float, float, float, float, float, float]
    gear_ratio: float = Field(1.0, gt=0)
    friction: Friction = Friction()


class Limits(_Strict):
    q_min: list[float]
    q_max: list[float]
    qd_max: list[float]
    tau_max: list[float]
    taud_max: list[float]


class Sphere(_Strict):
    link: int = Field(ge=0)
    offset: Vec3
    radius: float = Field(gt=0)


class RobotFile(_Strict):
    name: str = "robot"
    notes: Optional[str] = None
    units: Literal["rad", "deg"] = "rad"
    gravity: Vec3 = (0.0, 0.0, -9.81)
    joints: list[Joint] = Field(min_length=1)
    limits: Limits
    spheres: list[Sphere] = []
    self_pairs: Optional[list[tuple[int, int]]] = None


class Obstacle(_Strict):
    center: Vec3
    radius: float = Field(gt=0)


class Box(_Strict):
    min: Vec3
    max: Vec3


class SolverOverrides(_Strict):
    tol: Optional[float] = Field(None, gt=0)
    max_iter: Optional[int] = Field(None, ge=0)
    mu_init: Optional[float] = Field(None, gt=0)
    mu_factor: Optional[float] = Field(None, gt=0, lt=1)


class ScenarioFile(_Strict):
    units: Literal["rad", "deg"] = "rad"
    q0: list[float]
    qf: list[float]
    tf_min: float = Field(0.05, gt=0)
    tf_max: float = Field(20.0, gt=0)
    tf_guess: float = Field(DEFAULT_TF_GUESS, gt=0)
    mu: float = Field(0.3, ge=0)
    N: int = Field(12, ge=3)
    accel_bc: bool = True
    enforce_torque_rate: bool = True
    check_points: int = Field(0, ge=0)
    clearance: float = Field(0.0, ge=0)
    obstacles: list[Obstacle] = []
    workspace_box: Optional[Box] = None
    solver: SolverOverrides = SolverOverrides()


def _format_error(source, err: ValidationError) -> str:
    lines = []
    for e in err.errors():
        loc = ".".join(str(p) for p in e["loc"]) or "<root>"
        lines.append(f"{source}: field '{loc}': {e['msg']}")
    return "\n".join(lines)


def _read(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read file ({exc.strerror})") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc


def _angle(units):
    return np.pi / 180.0 if units == "deg" else 1.0


def parse_robot(data: dict, source="<robot>") -> tuple[RobotModel, CollisionWorld]:
    """Robot model and the robot side of the collision world."""
    try:
        cfg = RobotFile.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_format_error(source, exc)) from None
    n = len(cfg.joints)
    k = _angle(cfg.units)
    for name, arr in cfg.limits:
        if len(arr) != n:
            raise ConfigError(f"{source}: field 'limits.{name}': expected {n} entries (one per joint), got {len(arr)}")
    rots, inertias = [], []
    for i, j in enumerate(cfg.joints):
        if j.origin.rpy is not None and j.origin.quat is not None:
            raise ConfigError(f"{source}: field 'joints.{i}.origin': give either rpy or quat, not both")
        if j.origin.quat is not None:
            R = Rotation.from_quat(j.origin.quat, scalar_first=True).as_matrix()
        elif j.origin.rpy is not None:
            R = Rotation.from_euler("xyz", np.asarray(j.origin.rpy) * k).as_matrix()
        else:
            R = np.eye(3)
        rots.append(R)
        ixx, iyy, izz, ixy, ixz, iyz = j.inertia
        inertias.append(np.array([[ixx, ixy, ixz], [ixy, iyy, iyz], [ixz, iyz, izz]]))
        norm = np.linalg.norm(j.axis)
        if abs(norm - 1.0) > 1e-6:
            raise ConfigError(f"{source}: field 'joints.{i}.axis': must be a unit vector")
    lim = cfg.limits
    try:
        model = RobotModel(
            parents=[j.parent for j in cfg.joints],
            joint_xyz=[j.origin.xyz for j in cfg.joints],
            joint_rot=rots,
            axes=[np.asarray(j.axis) / np.linalg.norm(j.axis) for j in cfg.joints],
            masses=[j.mass for j in cfg.joints],
            coms=[j.com for j in cfg.joints],
            inertias=inertias,
            gear_ratios=[j.gear_ratio for j in cfg.joints],
            viscous=[j.friction.viscous for j in cfg.joints],
            coulomb=[j.friction.coulomb for j in cfg.joints],
            q_min=np.asarray(lim.q_min) * k,
            q_max=np.asarray(lim.q_max) * k,
            qd_max=np.asarray(lim.qd_max) * k,
            tau_max=lim.tau_max,
            taud_max=lim.taud_max,
            gravity=cfg.gravity,
            names=tuple(j.name or f"joint{i + 1}" for i, j in enumerate(cfg.joints)),
        )
        world = CollisionWorld(
            robot_spheres=[RobotSphere(s.link, s.offset, s.radius) for s in cfg.spheres],
            self_pairs=cfg.self_pairs,
        ).resolved(model)
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from None
    return model, world


def parse_scenario(data: dict, model: RobotModel, source="<scenario>"):
    """Scenario, obstacle list, workspace box and solver options."""
    try:
        cfg = ScenarioFile.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_format_error(source, exc)) from None
    k = _angle(cfg.units)
    for name in ("q0", "qf"):
        if len(getattr(cfg, name)) != model.n:
            raise ConfigError(
                f"{source}: field '{name}' has {len(getattr(cfg, name))} entries but the robot has {model.n} joints"
            )
    try:
        scenario = Scenario(
            q0=np.asarray(cfg.q0) * k,
            qf=np.asarray(cfg.qf) * k,
            tf_min=cfg.tf_min,
            tf_max=cfg.tf_max,
            mu=cfg.mu,
            N=cfg.N,
            accel_bc=cfg.accel_bc,
            enforce_torque_rate=cfg.enforce_torque_rate,
            tf_guess=cfg.tf_guess,
            check_points=cfg.check_points,
            clearance=cfg.clearance,
        )
        scenario.validate(model)
        obstacles = [ObstacleSphere(o.center, o.radius) for o in cfg.obstacles]
        box = (cfg.workspace_box.min, cfg.workspace_box.max) if cfg.workspace_box else None
        if box is not None and np.any(np.asarray(box[0]) >= np.asarray(box[1])):
            raise ValueError("workspace_box: min must be below max on every axis")
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from None
    overrides = {k_: v for k_, v in cfg.solver.model_dump().items() if v is not None}
    return scenario, obstacles, box, SolverOptions(**overrides)


def load_robot(path):
    return parse_robot(_read(path), str(path))


def load_scenario(path, model):
    return parse_scenario(_read(path), model, str(path))


def robot_to_dict(model: RobotModel, world: CollisionWorld | None = None, name="robot") -> dict:
    """Serialize a model (radians, fixed rotations as unit quaternions)."""
    joints = []
    for i in range(model.n):
        I = model.inertias[i]
        quat = Rotation.from_matrix(model.joint_rot[i]).as_quat(scalar_first=True)
        joints.append(
            {
                "name": model.names[i],
                "parent": model.parents[i],
                "origin": {"xyz": model.joint_xyz[i].tolist(), "quat": quat.tolist()},
                "axis": model.axes[i].tolist(),
                "mass": float(model.masses[i]),
                "com": model.coms[i].tolist(),
                "inertia": [I[0, 0], I[1, 1], I[2, 2], I[0, 1], I[0, 2], I[1, 2]],
                "gear_ratio": float(model.gear_ratios[i]),
                "friction": {"viscous": float(model.viscous[i]), "coulomb": float(model.coulomb[i])},
            }
        )
    out = {
        "name": name,
        "units": "rad",
        "gravity": model.gravity.tolist(),
        "joints": joints,
        "limits": {
            "q_min": model.q_min.tolist(),
            "q_max": model.q_max.tolist(),
            "qd_max": model.qd_max.tolist(),
            "tau_max": model.tau_max.tolist(),
            "taud_max": model.taud_max.tolist(),
        },
    }
    if world is not None:
        out["spheres"] = [{"link": s.link, "offset": list(s.offset), "radius": s.radius} for s in world.robot_spheres]
    return out


# -- templates ------------------------------------------------------------------

def _rod_inertia(m, length, radius=0.03):
    """Solid cylinder along x about its center: [ixx, iyy, izz, ixy, ixz, iyz]."""
    ixx = 0.5 * m * radius**2
    iyy = izz = m * (3 * radius**2 + length**2) / 12.0
    return [ixx, iyy, izz, 0.0, 0.0, 0.0]


def _two_link():
    l1, l2, m1, m2 = 0.5, 0.5, 2.0, 1.0
    robot = {
        "name": "two-link",
        "notes": "planar arm in the vertical x-y plane; joint axes along z, gravity along -y",
        "units": "rad",
        "gravity": [0.0, -9.81, 0.0],
        "joints": [
            {
                "name": "shoulder",
                "parent": -1,
                "axis": [0.0, 0.0, 1.0],
                "mass": m1,
                "com": [l1 / 2, 0.0, 0.0],
                "inertia": _rod_inertia(m1, l1),
                "gear_ratio": 50.0,
                "friction": {"viscous": 0.05, "coulomb": 0.0},
            },
            {
                "name": "elbow",
                "parent": 0,
                "origin": {"xyz": [l1, 0.0, 0.0]},
                "axis": [0.0, 0.0, 1.0],
                "mass": m2,
                "com": [l2 / 2, 0.0, 0.0],
                "inertia": _rod_inertia(m2, l2),
                "gear_ratio": 30.0,
                "friction": {"viscous": 0.05, "coulomb": 0.0},
            },
        ],
        "limits": {
            "q_min": [-3.0, -2.8],
            "q_max": [3.0, 2.8],
            "qd_max": [4.0, 5.0],
            "tau_max": [30.0, 12.0],
            "taud_max": [400.0, 200.0],
        },
        "spheres": [
            {"link": 0, "offset": [0.15, 0.0, 0.0], "radius": 0.06},
            {"link": 0, "offset": [0.35, 0.0, 0.0], "radius": 0.06},
            {"link": 1, "offset": [0.1, 0.0, 0.0], "radius": 0.05},
            {"link": 1, "offset": [0.25, 0.0, 0.0], "radius": 0.05},
            {"link": 1, "offset": [0.4, 0.0, 0.0], "radius": 0.05},
        ],
    }
    scenario = {
        "units": "rad",
        "q0": [-0.9, 0.6],
        "qf": [0.9, 0.2],
        "tf_min": 0.1,
        "tf_max": 10.0,
        "tf_guess": 10.0,
        "mu": 0.3,
        "N": 12,
        "accel_bc": True,
        "enforce_torque_rate": True,
        "check_points": 3,
        "clearance": 0.02,
        "solver": {"max_iter": 3000},
        # sits on the straight joint-space path, so the initial guess collides
        "obstacles": [{"center": [1.0, 0.2, 0.0], "radius": 0.3}],
    }
    return robot, scenario


# Kinematic layout loosely follows a 6-axis industrial arm with ~2.2 m reach.
# The actuator limits are realistic; masses, centers of mass and inertias are
# placeholders, not measured values.
_SIX_AXIS_LIMITS = {
    "q_min": [-160.0, -90.0, -120.0, -180.0, -120.0, -180.0],
    "q_max": [170.0, 90.0, 230.0, 180.0, 100.0, 180.0],
    "qd_max": [165.0, 165.0, 175.0, 350.0, 340.0, 520.0],
    "tau_max": [1397.0, 1402.0, 383.0, 45.2, 44.6, 32.5],
    "taud_max": [20948.0, 21035.0, 5741.0, 678.0, 669.0, 488.0],
}


def _six_axis():
    Y = [1.0, 0.0, 0.0, 0.0]
    joints = [
        ("J1", -1, [0.0, 0.0, 0.0], [0.0, 0.0, 1.0], 120.0, [0.0, 0.0, 0.2], [8.0, 8.0, 6.0], 150.0),
        ("J2", 0, [0.25, 0.0, 0.45], [0.0, 1.0, 0.0], 60.0, [0.0, 0.0, 0.35], [4.5, 4.5, 0.6], 150.0),
        ("J3", 1, [0.0, 0.0, 0.7], [0.0, 1.0, 0.0], 35.0, [0.3, 0.0, 0.1], [0.6, 2.0, 2.0], 120.0),
        ("J4", 2, [0.3, 0.0, 0.15], [1.0, 0.0, 0.0], 12.0, [0.3, 0.0, 0.0], [0.05, 0.4, 0.4], 80.0),
        ("J5", 3, [0.5, 0.0, 0.0], [0.0, 1.0, 0.0], 5.0, [0.05, 0.0, 0.0], [0.02, 0.02, 0.02], 80.0),
        ("J6", 4, [0.1, 0.0, 0.0], [1.0, 0.0, 0.0], 1.0, [0.03, 0.0, 0.0], [0.003, 0.003, 0.003], 60.0),
    ]
    robot = {
        "name": "six-axis",
        "notes": "industrial 6-axis actuator limits; inertial values are PLACEHOLDERS",
        "units": "deg",
        "gravity": [0.0, 0.0, -9.81],
        "joints": [
            {
                "name": name,
                "parent": parent,
                "origin": {"xyz": xyz, "quat": Y},
                "axis": axis,
                "mass": mass,
                "com": com,
                "inertia": list(diag) + [0.0, 0.0, 0.0],
                "gear_ratio": ratio,
                "friction": {"viscous": 2.0 if i < 3 else 0.2, "coulomb": 5.0 if i < 3 else 0.5},
            }
            for i, (name, parent, xyz, axis, mass, com, diag, ratio) in enumerate(joints)
        ],
        "limits": {k: list(v) for k, v in _SIX_AXIS_LIMITS.items()},
        "spheres": [
            {"link": 0, "offset": [0.0, 0.0, 0.25], "radius": 0.25},
            {"link": 1, "offset": [0.0, 0.0, 0.2], "radius": 0.15},
            {"link": 1, "offset": [0.0, 0.0, 0.5], "radius": 0.15},
            {"link": 2, "offset": [0.15, 0.0, 0.1], "radius": 0.13},
            {"link": 3, "offset": [0.2, 0.0, 0.0], "radius": 0.1},
            {"link": 3, "offset": [0.45, 0.0, 0.0], "radius": 0.09},
            {"link": 5, "offset": [0.08, 0.0, 0.0], "radius": 0.07},
        ],
    }
    scenario = {
        "units": "deg",
        "q0": [-60.0, 10.0, 20.0, 0.0, 30.0, 0.0],
        "qf": [60.0, 10.0, 20.0, 0.0, 30.0, 0.0],
        "tf_min": 0.2,
        "tf_max": 10.0,
        "tf_guess": 10.0,
        "mu": 0.3,
        "N": 12,
        "accel_bc": True,
        "enforce_torque_rate": True,
        "obstacles": [{"center": [1.0, 0.0, 0.6], "radius": 0.2}],
        "workspace_box": {"min": [-2.0, -2.0, 0.0], "max": [2.0, 2.0, 2.5]},
    }
    return robot, scenario


TEMPLATES = {"two-link": _two_link, "six-axis": _six_axis}


def template(kind: str) -> dict:
    """``{"robot": ..., "scenario": ...}`` documents for a shipped template."""
    try:
        robot, scenario = TEMPLATES[kind]()
    except KeyError:
        raise ConfigError(f"unknown template kind {kind!r}; choose from {sorted(TEMPLATES)}") from None
    return {"robot": robot, "scenario": scenario}
