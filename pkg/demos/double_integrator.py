"""Minimum-time motion of a unit mass with |u| <= 1.

The exact answer is bang-bang: full thrust for one second, full braking
for one second, so t_f = 2. A smooth polynomial cannot switch instantly,
so the collocated solution rounds the corner and lands slightly above 2.

    python demos/double_integrator.py [N]
"""

import sys

import numpy as np

from pstraj.collide import CollisionWorld
from pstraj.nlp import solve
from pstraj.ocp import Scenario, Transcription
from pstraj.robodyn import RobotModel


def unit_mass() -> RobotModel:
    """A single revolute joint whose dynamics reduce to qdd = tau."""
    return RobotModel(
        parents=[-1],
        joint_xyz=[[0.0, 0.0, 0.0]],
        joint_rot=[np.eye(3)],
        axes=[[0.0, 0.0, 1.0]],
        masses=[1.0],
        coms=[[0.0, 0.0, 0.0]],
        inertias=[np.eye(3)],
        gear_ratios=[1.0],
        viscous=[0.0],
        coulomb=[0.0],
        q_min=[-10.0],
        q_max=[10.0],
        qd_max=[10.0],
        tau_max=[1.0],
        taud_max=[1e6],
        gravity=[0.0, 0.0, 0.0],
    )


def main(N: int = 12) -> None:
    scenario = Scenario(q0=[0.0], qf=[1.0], N=N, mu=0.0, accel_bc=False, enforce_torque_rate=False, tf_max=10.0)
    tr = Transcription(unit_mass(), scenario, CollisionWorld())
    result = solve(tr.nlp(), tr.initial_guess())
    traj = tr.trajectory(result.x)
    print(f"status {result.status} after {result.iterations} iterations ({result.wall_time:.2f} s)")
    print(f"t_f = {traj.t_f:.5f} s (bang-bang optimum 2.0, gap {100 * (traj.t_f / 2 - 1):.2f}%)")
    print("   t [s]      u")
    for t, u in zip(np.asarray(traj.grid.knots)[::-1], traj.U[::-1, 0]):
        print(f"{t:8.4f} {u:+8.4f}")


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 12)
