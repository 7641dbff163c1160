"""Sphere-approximation collision world and its signed constraint margins."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from itertools import combinations

import numpy as np

from . import ad
from .robodyn import RobotModel, forward_kinematics

__all__ = [
    "RobotSphere",
    "ObstacleSphere",
    "CollisionWorld",
    "default_self_pairs",
    "robot_sphere_centers",
    "pair_margin",
    "collision_constraint_values",
]


@dataclass(frozen=True)
class RobotSphere:
    link: int
    offset: tuple
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "offset", tuple(float(v) for v in self.offset))
        if len(self.offset) != 3:
            raise ValueError("sphere offset must have 3 components")
        if not self.radius > 0:
            raise ValueError(f"sphere radius must be positive, got {self.radius}")


@dataclass(frozen=True)
class ObstacleSphere:
    center: tuple
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(v) for v in self.center))
        if len(self.center) != 3:
            raise ValueError("obstacle center must have 3 components")
        if not self.radius > 0:
            raise ValueError(f"obstacle radius must be positive, got {self.radius}")


@dataclass(frozen=True)
class CollisionWorld:
    """Robot spheres, obstacle spheres, optional workspace box and self pairs.

    ``self_pairs=None`` selects :func:`default_self_pairs` once the robot
    model is known.  ``squared=True`` switches every sphere-sphere margin to
    the smooth form ``|dc|^2 - (r1 + r2)^2``.
    """

    robot_spheres: tuple = ()
    obstacle_spheres: tuple = ()
    workspace_box: tuple | None = None
    self_pairs: tuple | None = None
    squared: bool = False

    def __post_init__(self):
        object.__setattr__(self, "robot_spheres", tuple(self.robot_spheres))
        object.__setattr__(self, "obstacle_spheres", tuple(self.obstacle_spheres))
        if self.workspace_box is not None:
            lo, hi = (np.asarray(b, dtype=float) for b in self.workspace_box)
            if lo.shape != (3,) or hi.shape != (3,) or np.any(lo >= hi):
                raise ValueError("workspace box needs 3-vectors with min < max")
            object.__setattr__(self, "workspace_box", (tuple(lo), tuple(hi)))
        if self.self_pairs is not None:
            pairs = tuple(tuple(sorted((int(a), int(b)))) for a, b in self.self_pairs)
            M = len(self.robot_spheres)
            for a, b in pairs:
                if not (0 <= a < M and 0 <= b < M) or a == b:
                    raise ValueError(f"invalid self-collision pair {(a, b)}")
            object.__setattr__(self, "self_pairs", pairs)

    def resolved(self, model: RobotModel) -> "CollisionWorld":
        """Copy with the default self-pair set filled in and links checked."""
        for k, s in enumerate(self.robot_spheres):
            if not 0 <= s.link < model.n:
                raise ValueError(f"robot sphere {k} refers to missing link {s.link}")
        if self.self_pairs is not None:
            for a, b in self.self_pairs:
                la, lb = self.robot_spheres[a].link, self.robot_spheres[b].link
                if la == lb or model.adjacent(la, lb):
                    raise ValueError(f"self pair {(a, b)} joins spheres on the same or adjacent links")
            return self
        return replace(self, self_pairs=default_self_pairs(model, self.robot_spheres))

    def with_obstacles(self, obstacles, workspace_box=None) -> "CollisionWorld":
        return replace(self, obstacle_spheres=tuple(obstacles), workspace_box=workspace_box)

    def constraint_count(self, model: RobotModel) -> int:
        w = self.resolved(model)
        M = len(w.robot_spheres)
        return len(w.self_pairs) + M * len(w.obstacle_spheres) + (6 * M if w.workspace_box else 0)


def default_self_pairs(model: RobotModel, spheres) -> tuple:
    """All sphere pairs whose links are neither identical nor adjacent."""
    pairs = []
    for a, b in combinations(range(len(spheres)), 2):
        la, lb = spheres[a].link, spheres[b].link
        if la != lb and not model.adjacent(la, lb):
            pairs.append((a, b))
    return tuple(pairs)


def robot_sphere_centers(model: RobotModel, world: CollisionWorld, q):
    """World-frame sphere centers, shape ``(..., M, 3)``."""
    frames = forward_kinematics(model, q)
    centers = []
    for k, s in enumerate(world.robot_spheres):
        if not 0 <= s.link < model.n:
            raise ValueError(f"robot sphere {k} refers to missing link {s.link}")
        R, p = frames[s.link]
        centers.append(p + ad.matvec(R, np.asarray(s.offset)))
    if not centers:
        return np.zeros(ad.value(q).shape[:-1] + (0, 3))
    return ad.stack(centers, axis=-2)


def pair_margin(c1, r1, c2, r2, squared=False):
    """Signed separation ``|c1 - c2| - (r1 + r2)``; negative means overlap."""
    d = c1 - c2
    dd = ad.dot(d, d)
    if squared:
        return dd - (r1 + r2) ** 2
    return ad.sqrt(dd) - (r1 + r2)


def collision_constraint_values(model: RobotModel, world: CollisionWorld, q):
    """Margins in fixed order: self pairs, (robot sphere, obstacle) pairs
    with the robot sphere index outer, then for each robot sphere the lower
    box margins (x, y, z) followed by the upper ones.  Feasible iff all >= 0.
    """
    world = world.resolved(model)
    batch = ad.value(q).shape[:-1]
    M = len(world.robot_spheres)
    parts = []
    if M == 0:
        return np.zeros(batch + (0,))
    C = robot_sphere_centers(model, world, q)
    r = np.array([s.radius for s in world.robot_spheres])
    if world.self_pairs:
        a = np.array([p[0] for p in world.self_pairs])
        b = np.array([p[1] for p in world.self_pairs])
        parts.append(pair_margin(C[..., a, :], r[a], C[..., b, :], r[b], world.squared))
    if world.obstacle_spheres:
        co = np.array([o.center for o in world.obstacle_spheres])
        ro = np.array([o.radius for o in world.obstacle_spheres])
        m = pair_margin(C[..., :, None, :], r[:, None], co[None, :, :], ro[None, :], world.squared)
        parts.append(ad.reshape(m, batch + (M * len(ro),)))
    if world.workspace_box is not None:
        lo, hi = (np.asarray(v) for v in world.workspace_box)
        low = C - r[:, None] - lo
        high = hi - C - r[:, None]
        box = ad.concatenate([low, high], axis=-1)
        parts.append(ad.reshape(box, batch + (6 * M,)))
    if not parts:
        return np.zeros(batch + (0,))
    return ad.concatenate(parts, axis=-1)
