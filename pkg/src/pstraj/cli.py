"""Command-line front end: ``plan``, ``validate`` and ``template``.

Exit codes: 0 success, 2 input error, 3 solver failure, 4 validation failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import config
from .collide import CollisionWorld, collision_constraint_values
from .nlp import SolverOptions, solve
from .ocp import Scenario, Transcription, Trajectory
from .robodyn import RobotModel, forward_dynamics

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_SOLVER = 3
EXIT_VALIDATION = 4

TOLERANCE = 1e-4
FAMILIES = ("position", "velocity", "torque", "torque_rate", "collision", "boundary", "dynamics")


class InputError(Exception):
    """Bad files or flags; maps to exit code 2."""


@dataclass
class FamilyResult:
    """Worst scaled violation of one constraint family (positive means violated)."""

    name: str
    worst: float
    where: str = ""

    @property
    def ok(self) -> bool:
        return self.worst <= TOLERANCE


@dataclass
class Report:
    families: list

    @property
    def ok(self) -> bool:
        return all(f.ok for f in self.families)

    @property
    def max_violation(self) -> float:
        return max((max(f.worst, 0.0) for f in self.families), default=0.0)

    def family(self, name: str) -> FamilyResult:
        for f in self.families:
            if f.name == name:
                return f
        raise KeyError(name)

    def lines(self):
        for f in self.families:
            flag = "ok" if f.ok else "VIOLATED"
            where = f" ({f.where})" if f.where else ""
            yield f"{f.name:<12} worst {f.worst: .3e}{where}  {flag}"


def _worst_box(name, values, lo, hi, scale, t):
    """Largest bound excess over all rows and columns, divided by ``scale``."""
    excess = np.maximum(values - hi, lo - values) / scale
    idx = np.unravel_index(np.argmax(excess), excess.shape)
    return FamilyResult(name, float(excess[idx]), f"t={t[idx[0]]:.6g} s, joint {idx[1] + 1}")


def check_samples(
    model: RobotModel,
    world: CollisionWorld,
    scenario: Scenario,
    t,
    q,
    qd,
    qdd,
    tau,
    taud=None,
) -> Report:
    """Check sampled motion against every limit family.

    Box limits are scaled by their range (``q_max - q_min``, ``2 qd_max``
    and so on); collision margins are reported in metres (negative margin
    means penetration, reported as a positive violation). ``taud`` defaults
    to a second-order finite difference of ``tau``.
    """
    t = np.asarray(t, dtype=float)
    if taud is None:
        taud = np.gradient(tau, t, axis=0, edge_order=2)
    fams = [
        _worst_box("position", q, model.q_min, model.q_max, model.q_max - model.q_min, t),
        _worst_box("velocity", qd, model.qd_min, model.qd_max, 2 * model.qd_max, t),
        _worst_box("torque", tau, model.tau_min, model.tau_max, 2 * model.tau_max, t),
    ]
    if scenario.enforce_torque_rate:
        fams.append(_worst_box("torque_rate", taud, model.taud_min, model.taud_max, 2 * model.taud_max, t))
    if world.constraint_count(model):
        margins = np.asarray(collision_constraint_values(model, world, q))
        k = np.unravel_index(np.argmin(margins), margins.shape)
        fams.append(FamilyResult("collision", float(-margins[k]), f"t={t[k[0]]:.6g} s, row {k[1]}"))
    # endpoint conditions; accelerations are scaled by qd_max / t_f
    t_f = float(t[-1])
    rows = [
        np.abs(q[0] - scenario.q0) / (model.q_max - model.q_min),
        np.abs(q[-1] - scenario.qf) / (model.q_max - model.q_min),
        np.abs(qd[0]) / (2 * model.qd_max),
        np.abs(qd[-1]) / (2 * model.qd_max),
    ]
    labels = ["q(0)", "q(t_f)", "qd(0)", "qd(t_f)"]
    if scenario.accel_bc:
        rows += [np.abs(qdd[0]) * t_f / (2 * model.qd_max), np.abs(qdd[-1]) * t_f / (2 * model.qd_max)]
        labels += ["qdd(0)", "qdd(t_f)"]
    worst = [float(np.max(r)) for r in rows]
    i = int(np.argmax(worst))
    fams.append(FamilyResult("boundary", worst[i], labels[i]))
    # the acceleration column must agree with the forward dynamics
    acc = forward_dynamics(model, q, qd, tau)
    dyn = np.abs(acc - qdd) * t_f / (2 * model.qd_max)
    j = np.unravel_index(np.argmax(dyn), dyn.shape)
    fams.append(FamilyResult("dynamics", float(dyn[j]), f"t={t[j[0]]:.6g} s, joint {j[1] + 1}"))
    return Report(fams)


def check_trajectory(traj: Trajectory, world: CollisionWorld, scenario: Scenario, samples: int = 1000) -> Report:
    """Dense validation of a planned trajectory using its exact torque rate."""
    t, q, qd, qdd, tau = traj.dense(samples)
    return check_samples(traj.model, world, scenario, t, q, qd, qdd, tau, taud=traj.torque_rate(t))


# -- CSV ----------------------------------------------------------------------------
def csv_header(n: int) -> list:
    cols = ["t"]
    for name in ("q", "qd", "qdd", "tau"):
        cols += [f"{name}_{i + 1}" for i in range(n)]
    return cols


def write_csv(path, t, q, qd, qdd, tau):
    n = q.shape[1]
    data = np.column_stack([t, q, qd, qdd, tau])
    with open(path, "w", newline="") as fh:
        fh.write(",".join(csv_header(n)) + "\n")
        for row in data:
            fh.write(",".join(f"{v:.12g}" for v in row) + "\n")


def read_csv(path, n: int):
    """Columns ``(t, q, qd, qdd, tau)`` of a trajectory CSV for an ``n``-joint robot."""
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise InputError(f"{path}: cannot read file ({exc.strerror})") from None
    if not rows:
        raise InputError(f"{path}: empty file")
    expected = csv_header(n)
    if [c.strip() for c in rows[0]] != expected:
        raise InputError(f"{path}: header {rows[0]} does not match the expected columns {expected}")
    try:
        data = np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=float)
    except ValueError as exc:
        raise InputError(f"{path}: non-numeric entry ({exc})") from None
    if data.ndim != 2 or data.shape[0] < 3 or data.shape[1] != len(expected):
        raise InputError(f"{path}: need at least 3 rows of {len(expected)} values")
    if not np.all(np.isfinite(data)):
        raise InputError(f"{path}: non-finite entry")
    t = data[:, 0]
    if abs(t[0]) > 1e-12 or np.any(np.diff(t) <= 0):
        raise InputError(f"{path}: time column must start at 0 and increase strictly")
    q, qd, qdd, tau = (data[:, 1 + k * n : 1 + (k + 1) * n] for k in range(4))
    return t, q, qd, qdd, tau


# -- commands -----------------------------------------------------------------------
def _load(robot_path, scenario_path):
    try:
        model, world = config.load_robot(robot_path)
        scenario, obstacles, box, opts = config.load_scenario(scenario_path, model)
    except config.ConfigError as exc:
        raise InputError(str(exc)) from None
    return model, world.with_obstacles(obstacles, box), scenario, opts


def cmd_plan(args) -> int:
    model, world, scenario, opts = _load(args.robot, args.scenario)
    try:
        if args.knots is not None:
            scenario = replace(scenario, N=args.knots)
        if args.mu is not None:
            scenario = replace(scenario, mu=args.mu)
        if args.tol is not None:
            opts = replace(opts, tol=args.tol)
        if args.samples < 2:
            raise ValueError("--samples must be at least 2")
        prefix = Path(args.prefix)
        outputs = {prefix.with_suffix(".csv").resolve(), prefix.with_suffix(".json").resolve()}
        if outputs & {Path(args.robot).resolve(), Path(args.scenario).resolve()}:
            raise ValueError(f"output prefix {args.prefix!r} would overwrite an input file")
    except ValueError as exc:
        raise InputError(str(exc)) from None
    log = open(args.log, "w") if args.log else None
    try:
        tr = Transcription(model, scenario, world)
        result = solve(tr.nlp(), tr.initial_guess(), replace(opts, log=log))
    except ValueError as exc:
        raise InputError(str(exc)) from None
    finally:
        if log is not None:
            log.close()
    traj = tr.trajectory(result.x)
    report = check_trajectory(traj, world, scenario, args.samples)
    t, q, qd, qdd, tau = traj.dense(args.samples)
    write_csv(prefix.with_suffix(".csv"), t, q, qd, qdd, tau)
    summary = {
        "t_f": traj.t_f,
        "cost": result.objective,
        "status": result.status,
        "iterations": result.iterations,
        "max_violation": report.max_violation,
        "violations": {f.name: f.worst for f in report.families},
        "wall_time": result.wall_time,
        "knots": scenario.N,
        "mu": scenario.mu,
    }
    prefix.with_suffix(".json").write_text(json.dumps(summary, indent=2) + "\n")
    print(f"status {result.status}: t_f = {traj.t_f:.6g} s, J = {result.objective:.6g}, {result.iterations} iterations")
    for line in report.lines():
        print(line)
    if not result.converged:
        return EXIT_SOLVER
    return EXIT_OK if report.ok else EXIT_VALIDATION


def cmd_validate(args) -> int:
    model, world, scenario, _ = _load(args.robot, args.scenario)
    t, q, qd, qdd, tau = read_csv(args.csv, model.n)
    report = check_samples(model, world, scenario, t, q, qd, qdd, tau)
    for line in report.lines():
        print(line)
    return EXIT_OK if report.ok else EXIT_VALIDATION


def cmd_template(args) -> int:
    doc = config.template(args.kind)
    if args.write:
        base = Path(args.write)
        for key in ("robot", "scenario"):
            path = base.parent / f"{base.name}_{key}.json"
            path.write_text(json.dumps(doc[key], indent=2) + "\n")
            print(path)
    else:
        json.dump(doc, sys.stdout, indent=2)
        sys.stdout.write("\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pstraj", description="Time-optimal, jerk-regularized robot trajectory planning.")
    sub = p.add_subparsers(dest="command", required=True)

    plan = sub.add_parser("plan", help="optimize a trajectory and export CSV + JSON summary")
    plan.add_argument("robot")
    plan.add_argument("scenario")
    plan.add_argument("prefix", help="output prefix; writes PREFIX.csv and PREFIX.json")
    plan.add_argument("--samples", type=int, default=1000, help="rows in the exported CSV (default 1000)")
    plan.add_argument("--knots", type=int, help="override the scenario's N")
    plan.add_argument("--mu", type=float, help="override the jerk weight")
    plan.add_argument("--tol", type=float, help="solver tolerance")
    plan.add_argument("--log", help="write the solver iteration log to this file")
    plan.add_argument("--seed", type=int, help="accepted for compatibility; the solver is deterministic")
    plan.set_defaults(func=cmd_plan)

    val = sub.add_parser("validate", help="check a trajectory CSV against robot and scenario limits")
    val.add_argument("robot")
    val.add_argument("scenario")
    val.add_argument("csv")
    val.set_defaults(func=cmd_validate)

    tpl = sub.add_parser("template", help="print a robot + scenario template")
    tpl.add_argument("kind", choices=sorted(config.TEMPLATES))
    tpl.add_argument("--write", metavar="PREFIX", help="write PREFIX_robot.json and PREFIX_scenario.json instead")
    tpl.set_defaults(func=cmd_template)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
