"""Pseudospectral trajectory optimization for serial robot arms.

Modules:

- ``specbasis``: Chebyshev-Lobatto knots, differentiation matrix, quadrature
- ``robodyn``: rigid-body dynamics (recursive Newton-Euler, articulated body)
- ``collide``: sphere-based collision margins
- ``ad``: forward-mode automatic differentiation
- ``ocp``: direct transcription of the planning problem
- ``nlp``: primal-dual interior-point solver
- ``cli``: command-line front end
"""
from .collide import CollisionWorld, ObstacleSphere, RobotSphere
from .nlp import NLPSpec, SolveResult, SolverOptions, solve
from .ocp import Scenario, Trajectory, Transcription
from .robodyn import RobotModel, RobotState

__version__ = "0.1.0"

__all__ = [
    "CollisionWorld",
    "ObstacleSphere",
    "RobotSphere",
    "NLPSpec",
    "SolveResult",
    "SolverOptions",
    "solve",
    "Scenario",
    "Trajectory",
    "Transcription",
    "RobotModel",
    "RobotState",
]
