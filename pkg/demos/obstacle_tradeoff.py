"""Two-link arm swinging past a spherical obstacle, fast versus smooth.

The straight joint-space line used as the starting guess drives the
forearm through the obstacle; the planner bends the path around it.
With no jerk penalty the arm rides its torque limits, while mu = 0.3
trades a longer motion for a much smoother torque profile. Each plan is
validated on a dense grid and written as CSV for plotting.

Limits are imposed at the knots only. The mu = 0 plan sits on its torque
limits, so between knots the polynomial overshoots by a few tenths of a
percent of the range and the dense check reports it as VIOLATED. The
smoother mu = 0.3 plan stays well inside every limit.

    python demos/obstacle_tradeoff.py [OUTPUT_DIR]
"""

import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from pstraj import cli, config
from pstraj.collide import collision_constraint_values
from pstraj.nlp import solve
from pstraj.ocp import Transcription


def main(out_dir: str = "demo_output") -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    doc = config.template("two-link")
    model, world = config.parse_robot(doc["robot"])
    base, obstacles, box, opts = config.parse_scenario(doc["scenario"], model)
    world = world.with_obstacles(obstacles, box)

    for mu in (0.0, 0.3):
        scenario = replace(base, mu=mu)
        tr = Transcription(model, scenario, world)
        z0 = tr.initial_guess()
        _, X0, _ = tr.unpack(z0)
        start_margin = np.min(collision_constraint_values(model, world, X0[:, : model.n]))
        result = solve(tr.nlp(), z0, opts)
        traj = tr.trajectory(result.x)
        report = cli.check_trajectory(traj, world, scenario, 1000)
        peak = np.max(np.abs(traj.torque_rate(np.linspace(0, traj.t_f, 1000))), axis=0)

        print(f"mu = {mu}: {result.status}, {result.iterations} iterations, {result.wall_time:.1f} s")
        print(f"  guess margin {start_margin:+.3f} m -> planned t_f = {traj.t_f:.4f} s")
        print(f"  peak torque rate {np.array2string(peak, precision=1)} N*m/s")
        for line in report.lines():
            print("  " + line)
        path = out / f"two_link_mu{mu:g}.csv"
        cli.write_csv(path, *traj.dense(500))
        print(f"  wrote {path}")


if __name__ == "__main__":
    main(*sys.argv[1:2])
