"""Serial-chain robot model: forward kinematics, recursive Newton-Euler
inverse dynamics, articulated-body forward dynamics and smooth friction.

All routines are vectorized over leading batch axes (``q`` has shape
``(..., n)``) and written with :mod:`pstraj.ad` operations, so they accept
plain arrays as well as dual numbers.  Only revolute joints are modelled.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import ad

__all__ = [
    "RobotModel",
    "RobotState",
    "forward_kinematics",
    "friction_torque",
    "inverse_dynamics",
    "forward_dynamics",
    "forward_dynamics_crba",
    "state_derivative",
    "mass_matrix",
    "gravity_torque",
    "kinetic_energy",
    "potential_energy",
]

FRICTION_EPS = 0.01  # rad/s, tanh smoothing of Coulomb friction


def _arr(x, shape=None):
    a = np.array(x, dtype=float)
    if shape is not None:
        a = a.reshape(shape)
    a.setflags(write=False)
    return a


def _skew(v):
    v = np.asarray(v, dtype=float)
    return np.array([[0.0, -v[2], v[1]], [v[2], 0.0, -v[0]], [-v[1], v[0], 0.0]])


@dataclass(frozen=True, eq=False)
class RobotModel:
    """Kinematic tree of revolute joints with inertial data and limits.

    Link ``i`` is attached to joint ``i``.  Its frame sits at
    ``joint_xyz[i]`` in the parent frame, rotated by ``joint_rot[i]`` and then
    by the joint angle about ``axes[i]`` (given in the link frame).  Centers
    of mass and inertia tensors (about the center of mass) are in link
    coordinates.
    """

    parents: tuple
    joint_xyz: np.ndarray
    joint_rot: np.ndarray
    axes: np.ndarray
    masses: np.ndarray
    coms: np.ndarray
    inertias: np.ndarray
    gear_ratios: np.ndarray
    viscous: np.ndarray
    coulomb: np.ndarray
    q_min: np.ndarray
    q_max: np.ndarray
    qd_max: np.ndarray
    tau_max: np.ndarray
    taud_max: np.ndarray
    gravity: np.ndarray = field(default_factory=lambda: _arr([0.0, 0.0, -9.81]))
    names: tuple = ()
    friction_eps: float = FRICTION_EPS

    def __post_init__(self):
        n = len(self.parents)
        if n < 1:
            raise ValueError("robot needs at least one joint")
        set_ = object.__setattr__
        set_(self, "parents", tuple(int(p) for p in self.parents))
        shapes = {
            "joint_xyz": (n, 3),
            "joint_rot": (n, 3, 3),
            "axes": (n, 3),
            "masses": (n,),
            "coms": (n, 3),
            "inertias": (n, 3, 3),
            "gear_ratios": (n,),
            "viscous": (n,),
            "coulomb": (n,),
            "q_min": (n,),
            "q_max": (n,),
            "qd_max": (n,),
            "tau_max": (n,),
            "taud_max": (n,),
            "gravity": (3,),
        }
        for name, shape in shapes.items():
            a = np.array(getattr(self, name), dtype=float)
            if a.shape != shape:
                raise ValueError(f"{name}: expected shape {shape}, got {a.shape}")
            if not np.all(np.isfinite(a)) and name not in ("q_min", "q_max", "qd_max", "tau_max", "taud_max"):
                raise ValueError(f"{name}: non-finite entries")
            set_(self, name, _arr(a))
        if not self.names:
            set_(self, "names", tuple(f"joint{i + 1}" for i in range(n)))
        for i, p in enumerate(self.parents):
            if not -1 <= p < i:
                raise ValueError(f"joint {i}: parent {p} must precede it (or be -1 for the base)")
        if self.parents[0] != -1:
            raise ValueError("joint 0 must be attached to the base")
        norms = np.linalg.norm(self.axes, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-9):
            raise ValueError("joint axes must be unit vectors")
        for i, R in enumerate(self.joint_rot):
            if np.max(np.abs(R @ R.T - np.eye(3))) > 1e-9 or np.linalg.det(R) < 0:
                raise ValueError(f"joint {i}: fixed rotation is not a proper rotation")
        if np.any(self.masses <= 0):
            raise ValueError("link masses must be positive")
        for i, Ic in enumerate(self.inertias):
            if np.max(np.abs(Ic - Ic.T)) > 1e-12 or np.min(np.linalg.eigvalsh(Ic)) <= 0:
                raise ValueError(f"link {i}: inertia tensor must be symmetric positive definite")
        if np.any(self.gear_ratios <= 0):
            raise ValueError("gear ratios must be positive")
        if np.any(self.q_min >= self.q_max):
            raise ValueError("q_min must be below q_max")
        for name in ("qd_max", "tau_max", "taud_max"):
            if np.any(getattr(self, name) <= 0):
                raise ValueError(f"{name} must be positive")
        if self.friction_eps <= 0:
            raise ValueError("friction_eps must be positive")

    @property
    def n(self) -> int:
        return len(self.parents)

    @property
    def qd_min(self):
        return -self.qd_max

    @property
    def tau_min(self):
        return -self.tau_max

    @property
    def taud_min(self):
        return -self.taud_max

    @property
    def jerk_weights(self) -> np.ndarray:
        """Diagonal of the jerk weight matrix, ``1 / R_ii**2``."""
        return 1.0 / self.gear_ratios**2

    def children(self, i):
        return [j for j, p in enumerate(self.parents) if p == i]

    def adjacent(self, i, j) -> bool:
        return self.parents[i] == j or self.parents[j] == i

    def without_gravity(self) -> "RobotModel":
        from dataclasses import replace

        return replace(self, gravity=np.zeros(3))

    def without_friction(self) -> "RobotModel":
        from dataclasses import replace

        return replace(self, viscous=np.zeros(self.n), coulomb=np.zeros(self.n))

    def __eq__(self, other):
        if not isinstance(other, RobotModel):
            return NotImplemented
        for f in self.__dataclass_fields__:
            a, b = getattr(self, f), getattr(other, f)
            if isinstance(a, np.ndarray):
                if a.shape != b.shape or not np.array_equal(a, b):
                    return False
            elif a != b:
                return False
        return True

    __hash__ = None


@dataclass(frozen=True)
class RobotState:
    q: np.ndarray
    qdot: np.ndarray

    def __post_init__(self):
        if ad.value(self.q).shape != ad.value(self.qdot).shape:
            raise ValueError("q and qdot must have equal shapes")

    @classmethod
    def from_vector(cls, x, n: int) -> "RobotState":
        return cls(x[..., :n], x[..., n:])


def _check(model: RobotModel, *vectors):
    for v in vectors:
        shape = ad.value(v).shape
        if not shape or shape[-1] != model.n:
            raise ValueError(f"expected trailing dimension {model.n}, got shape {shape}")


def _axis_rotation(axis, angle):
    K = _skew(axis)
    K2 = K @ K
    s = ad.sin(angle)[..., None, None]
    c = ad.cos(angle)[..., None, None]
    return np.eye(3) + s * K + (1.0 - c) * K2


def _joint_rotations(model: RobotModel, q):
    """Parent-to-link orientation ``E_i`` (link axes in parent coordinates)."""
    return [ad.matmul(model.joint_rot[i], _axis_rotation(model.axes[i], q[..., i])) for i in range(model.n)]


def forward_kinematics(model: RobotModel, q):
    """World pose ``(R, p)`` of every link frame.

    ``R`` has shape ``(..., 3, 3)`` and maps link coordinates to world
    coordinates; ``p`` is the link frame origin in the world.
    """
    _check(model, q)
    E = _joint_rotations(model, q)
    frames = []
    for i, parent in enumerate(model.parents):
        if parent < 0:
            R, p = E[i], model.joint_xyz[i]
            p = p + 0.0 * ad.value(q)[..., :1]
        else:
            Rp, pp = frames[parent]
            R = ad.matmul(Rp, E[i])
            p = pp + ad.matvec(Rp, model.joint_xyz[i])
        frames.append((R, p))
    return frames


def friction_torque(model: RobotModel, qdot):
    """Viscous plus tanh-smoothed Coulomb friction, odd in each velocity."""
    _check(model, qdot)
    return model.viscous * qdot + model.coulomb * ad.tanh(qdot / model.friction_eps)


def inverse_dynamics(model: RobotModel, q, qdot, qddot, *, gravity=True, friction=True):
    """Joint torques for a prescribed motion (recursive Newton-Euler)."""
    _check(model, q, qdot, qddot)
    n = model.n
    E = _joint_rotations(model, q)
    g = model.gravity if gravity else np.zeros(3)
    w, wd, vd, F, Nm = [None] * n, [None] * n, [None] * n, [None] * n, [None] * n
    for i, p in enumerate(model.parents):
        a = model.axes[i]
        Et = ad.swap_last(E[i])
        o = model.joint_xyz[i]
        wq = a * qdot[..., i, None]
        if p < 0:
            w_in = np.zeros(3)
            w[i] = wq + 0.0 * ad.value(q)[..., :1]
            wd[i] = a * qddot[..., i, None]
            vd[i] = ad.matvec(Et, -g)
        else:
            w_in = ad.matvec(Et, w[p])
            w[i] = w_in + wq
            wd[i] = ad.matvec(Et, wd[p]) + a * qddot[..., i, None] + ad.cross(w_in, wq)
            acc = vd[p] + ad.cross(wd[p], o) + ad.cross(w[p], ad.cross(w[p], o))
            vd[i] = ad.matvec(Et, acc)
        c = model.coms[i]
        Ic = model.inertias[i]
        vc = vd[i] + ad.cross(wd[i], c) + ad.cross(w[i], ad.cross(w[i], c))
        F[i] = model.masses[i] * vc
        Nm[i] = ad.matvec(Ic, wd[i]) + ad.cross(w[i], ad.matvec(Ic, w[i]))
    f, nt = [None] * n, [None] * n
    tau = [None] * n
    for i in reversed(range(n)):
        fi = F[i]
        ni = Nm[i] + ad.cross(model.coms[i], F[i])
        for ch in model.children(i):
            fc = ad.matvec(E[ch], f[ch])
            fi = fi + fc
            ni = ni + ad.matvec(E[ch], nt[ch]) + ad.cross(model.joint_xyz[ch], fc)
        f[i], nt[i] = fi, ni
        tau[i] = ad.dot(ni, model.axes[i])
    tau = ad.stack(tau, axis=-1)
    if friction:
        tau = tau + friction_torque(model, qdot)
    return tau


def _spatial_inertia(m, c, Ic):
    C = _skew(c)
    out = np.zeros((6, 6))
    out[:3, :3] = Ic + m * C @ C.T
    out[:3, 3:] = m * C
    out[3:, :3] = m * C.T
    out[3:, 3:] = m * np.eye(3)
    return out


def _motion_cross(v, m):
    """Spatial motion cross product ``v x m`` (6-vectors, angular first)."""
    w, u = v[..., :3], v[..., 3:]
    mw, mu = m[..., :3], m[..., 3:]
    return ad.concatenate([ad.cross(w, mw), ad.cross(w, mu) + ad.cross(u, mw)], axis=-1)


def _force_cross(v, f):
    """Spatial force cross product ``v x* f``."""
    w, u = v[..., :3], v[..., 3:]
    fn, ff = f[..., :3], f[..., 3:]
    return ad.concatenate([ad.cross(w, fn) + ad.cross(u, ff), ad.cross(w, ff)], axis=-1)


def _parent_transform(Et, o):
    """Plücker transform of motion vectors from parent to link coordinates."""
    Z = np.zeros(ad.value(Et).shape)
    lower = -ad.matmul(Et, _skew(o))
    top = ad.concatenate([Et, Z], axis=-1)
    bottom = ad.concatenate([lower, Et], axis=-1)
    return ad.concatenate([top, bottom], axis=-2)


def forward_dynamics(model: RobotModel, q, qdot, tau):
    """Joint accelerations for applied torques (articulated-body algorithm).

    Friction is subtracted from ``tau`` before the recursion.
    """
    _check(model, q, qdot, tau)
    for v in (q, qdot, tau):
        if not np.all(np.isfinite(ad.value(v))):
            raise ValueError("non-finite input to forward dynamics")
    n = model.n
    E = _joint_rotations(model, q)
    tau = tau - friction_torque(model, qdot)
    S = [np.concatenate([model.axes[i], np.zeros(3)]) for i in range(n)]
    X, v, c, IA, pA = [None] * n, [None] * n, [None] * n, [None] * n, [None] * n
    for i, p in enumerate(model.parents):
        X[i] = _parent_transform(ad.swap_last(E[i]), model.joint_xyz[i])
        vJ = S[i] * qdot[..., i, None]
        if p < 0:
            v[i] = vJ
            c[i] = 0.0 * vJ
        else:
            v[i] = ad.matvec(X[i], v[p]) + vJ
            c[i] = _motion_cross(v[i], vJ)
        Ii = _spatial_inertia(model.masses[i], model.coms[i], model.inertias[i])
        IA[i] = Ii + 0.0 * ad.value(q)[..., :1, None]
        pA[i] = _force_cross(v[i], ad.matvec(Ii, v[i]))
    U, d, u = [None] * n, [None] * n, [None] * n
    for i in reversed(range(n)):
        U[i] = ad.matvec(IA[i], S[i])
        d[i] = ad.dot(U[i], S[i])
        u[i] = tau[..., i] - ad.dot(pA[i], S[i])
        p = model.parents[i]
        if p >= 0:
            Ia = IA[i] - U[i][..., :, None] * U[i][..., None, :] / d[i][..., None, None]
            pa = pA[i] + ad.matvec(Ia, c[i]) + U[i] * (u[i] / d[i])[..., None]
            Xt = ad.swap_last(X[i])
            IA[p] = IA[p] + ad.matmul(Xt, ad.matmul(Ia, X[i]))
            pA[p] = pA[p] + ad.matvec(Xt, pa)
    a0 = np.concatenate([np.zeros(3), -model.gravity])
    a = [None] * n
    qdd = [None] * n
    for i, p in enumerate(model.parents):
        ap = ad.matvec(X[i], a0 if p < 0 else a[p])
        ai = ap + c[i]
        qdd[i] = (u[i] - ad.dot(U[i], ai)) / d[i]
        a[i] = ai + S[i] * qdd[i][..., None]
    return ad.stack(qdd, axis=-1)


def mass_matrix(model: RobotModel, q):
    """Joint-space inertia matrix, assembled column by column from RNEA."""
    _check(model, q)
    n = model.n
    qb = ad.stack([q] * n, axis=-2)
    zeros = np.zeros(ad.value(qb).shape)
    eye = np.broadcast_to(np.eye(n), ad.value(qb).shape)
    cols = inverse_dynamics(model, qb, zeros, eye, gravity=False, friction=False)
    return ad.swap_last(cols)


def gravity_torque(model: RobotModel, q):
    z = np.zeros(ad.value(q).shape)
    return inverse_dynamics(model, q, z, z, friction=False)


def forward_dynamics_crba(model: RobotModel, q, qdot, tau):
    """Reference forward dynamics solving ``M qdd = tau - bias`` directly."""
    _check(model, q, qdot, tau)
    bias = inverse_dynamics(model, q, qdot, np.zeros(ad.value(q).shape))
    return ad.solve(mass_matrix(model, q), tau - bias)


def state_derivative(model: RobotModel, x, u):
    """``F(x, u) = [qdot, qddot]`` for a state vector ``[q, qdot]`` or a RobotState."""
    if isinstance(x, RobotState):
        q, qd = x.q, x.qdot
    else:
        if ad.value(x).shape[-1] != 2 * model.n:
            raise ValueError(f"state must have trailing dimension {2 * model.n}")
        q, qd = x[..., : model.n], x[..., model.n :]
    qdd = forward_dynamics(model, q, qd, u)
    return ad.concatenate([qd, qdd], axis=-1)


def kinetic_energy(model: RobotModel, q, qdot):
    M = mass_matrix(model, q)
    return 0.5 * ad.dot(qdot, ad.matvec(M, qdot))


def potential_energy(model: RobotModel, q):
    total = 0.0
    for i, (R, p) in enumerate(forward_kinematics(model, q)):
        pc = p + ad.matvec(R, model.coms[i])
        total = total - model.masses[i] * ad.dot(model.gravity, pc)
    return total
