"""Pseudospectral transcription of the time-optimal motion planning problem.

Decision vector layout (flat): ``[t_f, X.ravel(), U.ravel()]`` where ``X`` is
``(N+1, 2n)`` with rows ``[q, qdot]`` per knot and ``U`` is ``(N+1, n)``
torques; rows follow the descending knot order (row 0 is ``t = t_f``).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import ad
from .collide import CollisionWorld, collision_constraint_values
from .robodyn import RobotModel, forward_dynamics, inverse_dynamics, state_derivative
from .specbasis import (
    KnotGrid,
    barycentric_eval,
    chebyshev_knots,
    clenshaw_curtis_weights,
    diff_matrix,
    interpolation_matrix,
)

__all__ = [
    "Scenario",
    "Transcription",
    "Trajectory",
    "initial_guess",
    "cost",
    "dynamics_defects",
    "path_constraint_values",
    "boundary_constraint_values",
    "extract_trajectory",
    "sample",
]

DEFAULT_TF_GUESS = 10.0


@dataclass(frozen=True)
class Scenario:
    """Boundary data and transcription settings for one planning problem.

    ``check_points`` adds that many interior evaluation points per knot
    interval at which position, velocity, torque, torque-rate and collision
    limits are also imposed (0 keeps the knots-only formulation).
    ``clearance`` raises the lower bound of every collision margin row
    (in the margin's own units, metres unless the world uses squared
    margins) so that the interpolated motion keeps a buffer between the
    points where collisions are checked.
    """

    q0: np.ndarray
    qf: np.ndarray
    tf_min: float = 0.05
    tf_max: float = 20.0
    mu: float = 0.3
    N: int = 12
    accel_bc: bool = True
    enforce_torque_rate: bool = True
    tf_guess: float = DEFAULT_TF_GUESS
    check_points: int = 0
    clearance: float = 0.0

    def __post_init__(self):
        q0 = np.array(self.q0, dtype=float).ravel()
        qf = np.array(self.qf, dtype=float).ravel()
        if q0.shape != qf.shape:
            raise ValueError("q0 and qf must have the same length")
        q0.setflags(write=False)
        qf.setflags(write=False)
        object.__setattr__(self, "q0", q0)
        object.__setattr__(self, "qf", qf)
        if not 0 < self.tf_min <= self.tf_max:
            raise ValueError("terminal time bounds need 0 < tf_min <= tf_max")
        if not self.mu >= 0:
            raise ValueError("mu must be non-negative")
        if int(self.N) != self.N or self.N < 3:
            raise ValueError("N must be an integer >= 3")
        object.__setattr__(self, "N", int(self.N))
        if not self.tf_guess > 0:
            raise ValueError("tf_guess must be positive")
        if int(self.check_points) != self.check_points or self.check_points < 0:
            raise ValueError("check_points must be a non-negative integer")
        if not self.clearance >= 0:
            raise ValueError("clearance must be non-negative")

    def validate(self, model: RobotModel):
        if self.q0.size != model.n:
            raise ValueError(f"scenario has {self.q0.size} joints, robot has {model.n}")
        for name, q in (("q0", self.q0), ("qf", self.qf)):
            bad = np.flatnonzero((q < model.q_min) | (q > model.q_max))
            if bad.size:
                raise ValueError(f"{name}[{bad[0]}] = {q[bad[0]]} outside position limits")


def _smoothstep(s):
    return s**3 * (10.0 - 15.0 * s + 6.0 * s**2)


def _smoothstep_rate(s):
    return 30.0 * s**2 * (1.0 - s) ** 2


class Transcription:
    """Cost, defect and constraint functions of one scenario on one grid.

    All evaluation methods accept plain arrays or :class:`pstraj.ad.Dual`
    decision vectors.
    """

    def __init__(self, model: RobotModel, scenario: Scenario, world: CollisionWorld | None = None):
        scenario.validate(model)
        self.model = model
        self.scenario = scenario
        self.world = (world or CollisionWorld()).resolved(model)
        self.n = model.n
        self.N = scenario.N
        self.K = scenario.N + 1
        self.grid_ref = chebyshev_knots(self.N, 1.0)
        self.D = np.asarray(diff_matrix(self.grid_ref).entries)
        self.w_ref = np.asarray(clenshaw_curtis_weights(self.grid_ref).weights)
        self.size = 1 + 3 * self.n * self.K
        self.n_collision = self.world.constraint_count(model)
        cp = scenario.check_points
        if cp:
            knots = np.asarray(self.grid_ref.knots)
            frac = np.arange(1, cp + 1) / (cp + 1)
            pts = (knots[:-1, None] + (knots[1:] - knots[:-1])[:, None] * frac[None, :]).ravel()
            self.check_times_ref = pts
            self.L_check = interpolation_matrix(self.grid_ref, pts)
        else:
            self.check_times_ref = np.zeros(0)
            self.L_check = np.zeros((0, self.K))

    # -- layout -----------------------------------------------------------
    def pack(self, t_f, X, U) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        U = np.asarray(U, dtype=float)
        if X.shape != (self.K, 2 * self.n) or U.shape != (self.K, self.n):
            raise ValueError("X or U has the wrong shape for this transcription")
        return np.concatenate([[float(t_f)], X.ravel(), U.ravel()])

    def unpack(self, z):
        if ad.value(z).shape != (self.size,):
            raise ValueError(f"decision vector must have length {self.size}")
        k = 1 + 2 * self.n * self.K
        t_f = z[0]
        X = ad.reshape(z[1:k], (self.K, 2 * self.n))
        U = ad.reshape(z[k:], (self.K, self.n))
        return t_f, X, U

    def grid(self, t_f: float) -> KnotGrid:
        return chebyshev_knots(self.N, float(t_f))

    # -- bounds -------------------------------------------------------------
    def variable_bounds(self):
        m, s, K = self.model, self.scenario, self.K
        xl = self.pack(s.tf_min, np.tile(np.concatenate([m.q_min, m.qd_min]), (K, 1)), np.tile(m.tau_min, (K, 1)))
        xu = self.pack(s.tf_max, np.tile(np.concatenate([m.q_max, m.qd_max]), (K, 1)), np.tile(m.tau_max, (K, 1)))
        return xl, xu

    # -- pieces -------------------------------------------------------------
    def knot_accelerations(self, z):
        _, X, U = self.unpack(z)
        return forward_dynamics(self.model, X[:, : self.n], X[:, self.n :], U)

    def _jerk_term(self, t_f, qdd):
        jerk = ad.matmul(self.D, qdd) * (2.0 / t_f)
        integrand = ad.sum(jerk * jerk * self.model.jerk_weights, axis=-1)
        return t_f * ad.sum(integrand * self.w_ref)

    def cost(self, z, qdd=None):
        t_f, X, U = self.unpack(z)
        if self.scenario.mu == 0:
            return t_f
        if qdd is None:
            qdd = forward_dynamics(self.model, X[:, : self.n], X[:, self.n :], U)
        return t_f + self.scenario.mu * self._jerk_term(t_f, qdd)

    def jerk_integrand(self, z):
        """Knot values of ``jerk^T Q jerk`` (the quadrature integrand)."""
        t_f, X, U = self.unpack(z)
        qdd = forward_dynamics(self.model, X[:, : self.n], X[:, self.n :], U)
        jerk = ad.matmul(self.D, qdd) * (2.0 / t_f)
        return ad.sum(jerk * jerk * self.model.jerk_weights, axis=-1)

    def dynamics_defects(self, z, qdd=None):
        t_f, X, U = self.unpack(z)
        if qdd is None:
            F = state_derivative(self.model, X, U)
        else:
            F = ad.concatenate([X[:, self.n :], qdd], axis=-1)
        return ad.matmul(self.D, X) - F * (t_f / 2.0)

    def torque_rates(self, z):
        t_f, _, U = self.unpack(z)
        return ad.matmul(self.D, U) * (2.0 / t_f)

    def _path_sections(self, z):
        """(name, values, lower, upper) blocks; the first three are simple bounds."""
        m, s, n, K = self.model, self.scenario, self.n, self.K
        t_f, X, U = self.unpack(z)
        q, qd = X[:, :n], X[:, n:]
        secs = [
            ("q", q, np.tile(m.q_min, K), np.tile(m.q_max, K)),
            ("qd", qd, np.tile(m.qd_min, K), np.tile(m.qd_max, K)),
            ("tau", U, np.tile(m.tau_min, K), np.tile(m.tau_max, K)),
        ]
        DU = None
        if s.enforce_torque_rate:
            DU = ad.matmul(self.D, U)
            secs.append(("taud", DU * (2.0 / t_f), np.tile(m.taud_min, K), np.tile(m.taud_max, K)))
        L = self.n_collision
        if L:
            secs.append(("collision", collision_constraint_values(m, self.world, q), np.full(K * L, float(s.clearance)), np.full(K * L, np.inf)))
        P = self.L_check.shape[0]
        if P:
            Lc = self.L_check
            secs.append(("q_check", ad.matmul(Lc, q), np.tile(m.q_min, P), np.tile(m.q_max, P)))
            secs.append(("qd_check", ad.matmul(Lc, qd), np.tile(m.qd_min, P), np.tile(m.qd_max, P)))
            secs.append(("tau_check", ad.matmul(Lc, U), np.tile(m.tau_min, P), np.tile(m.tau_max, P)))
            if DU is not None:
                secs.append(("taud_check", ad.matmul(Lc, DU) * (2.0 / t_f), np.tile(m.taud_min, P), np.tile(m.taud_max, P)))
            if L:
                qc = ad.matmul(Lc, q)
                secs.append(("collision_check", collision_constraint_values(m, self.world, qc), np.full(P * L, float(s.clearance)), np.full(P * L, np.inf)))
        return [(name, ad.reshape(v, (-1,)), lo, hi) for name, v, lo, hi in secs]

    def path_constraint_values(self, z):
        """Path constraint values with their lower and upper bounds.

        Order: q, qdot, tau box rows; torque rates (if enabled); collision
        margins per knot; then the same families at check points, if any.
        """
        secs = self._path_sections(z)
        vals = ad.concatenate([v for _, v, _, _ in secs])
        lo = np.concatenate([s[2] for s in secs])
        hi = np.concatenate([s[3] for s in secs])
        return vals, lo, hi

    def path_layout(self):
        """Names and lengths of the path constraint blocks, in order."""
        z = self.initial_guess()
        return [(name, len(lo)) for name, _, lo, _ in self._path_sections(z)]

    def boundary_constraint_values(self, z, qdd=None):
        """Endpoint equality residuals and terminal-time bound margins.

        Equalities: ``q(T_N) - q0``, ``q(T_0) - qf``, ``qdot(T_N)``,
        ``qdot(T_0)``, and with ``accel_bc`` the accelerations from the
        dynamics at ``T_N`` and ``T_0``.
        """
        n, s = self.n, self.scenario
        t_f, X, U = self.unpack(z)
        parts = [X[-1, :n] - s.q0, X[0, :n] - s.qf, X[-1, n:], X[0, n:]]
        if s.accel_bc:
            if qdd is None:
                ends = ad.stack([X[-1], X[0]])
                uends = ad.stack([U[-1], U[0]])
                acc = forward_dynamics(self.model, ends[:, :n], ends[:, n:], uends)
                parts += [acc[0], acc[1]]
            else:
                parts += [qdd[-1], qdd[0]]
        tf_margins = np.array([ad.value(t_f) - s.tf_min, s.tf_max - ad.value(t_f)])
        return ad.concatenate(parts), tf_margins

    # -- NLP assembly ---------------------------------------------------------
    def constraints(self, z):
        """All general constraints as one vector (bounds from :meth:`constraint_bounds`)."""
        return self._evaluate(z)[1]

    def _evaluate(self, z):
        t_f, X, U = self.unpack(z)
        qdd = forward_dynamics(self.model, X[:, : self.n], X[:, self.n :], U)
        J = self.cost(z, qdd=qdd)
        defects = ad.reshape(self.dynamics_defects(z, qdd=qdd), (-1,))
        beq, _ = self.boundary_constraint_values(z, qdd=qdd)
        rest = [v for _, v, _, _ in self._path_sections(z)[3:]]
        c = ad.concatenate([defects, beq] + rest)
        return J, c

    def fused(self, z):
        """Cost followed by all general constraints, for one-sweep differentiation."""
        J, c = self._evaluate(z)
        return ad.concatenate([ad.reshape(J, (1,)), c])

    def constraint_bounds(self):
        z = self.initial_guess()
        secs = self._path_sections(z)[3:]
        n_eq = self.K * 2 * self.n + 4 * self.n + (2 * self.n if self.scenario.accel_bc else 0)
        lo = np.concatenate([np.zeros(n_eq)] + [s[2] for s in secs])
        hi = np.concatenate([np.zeros(n_eq)] + [s[3] for s in secs])
        return lo, hi

    def nlp(self):
        from .nlp import NLPSpec

        xl, xu = self.variable_bounds()
        cl, cu = self.constraint_bounds()
        return NLPSpec(
            n=self.size,
            objective=self.cost,
            constraints=self.constraints,
            cl=cl,
            cu=cu,
            xl=xl,
            xu=xu,
            fused=self.fused,
            jac_batch=None,
        )

    # -- guesses and solutions --------------------------------------------------
    def initial_guess(self) -> np.ndarray:
        """Straight joint-space line from q0 to qf with rest-to-rest timing.

        The path is traversed with the quintic smoothstep so endpoint
        velocities vanish; torques hold the guessed state with zero
        acceleration.  Collisions are not considered.
        """
        s, n = self.scenario, self.n
        t_f = float(np.clip(s.tf_guess, s.tf_min, s.tf_max))
        sigma = np.asarray(self.grid_ref.knots)
        dq = s.qf - s.q0
        q = s.q0 + _smoothstep(sigma)[:, None] * dq
        qd = (_smoothstep_rate(sigma)[:, None] * dq) / t_f
        q[0], q[-1] = s.qf, s.q0
        u = inverse_dynamics(self.model, q, qd, np.zeros_like(q))
        return self.pack(t_f, np.hstack([q, qd]), u)

    def trajectory(self, z) -> "Trajectory":
        t_f, X, U = self.unpack(np.asarray(z, dtype=float))
        return Trajectory(grid=self.grid(t_f), X=X.copy(), U=U.copy(), model=self.model)


@dataclass(frozen=True)
class Trajectory:
    """Continuous-time trajectory induced by knot data.

    ``q``, ``qdot`` and ``tau`` are barycentric interpolants of the knot
    rows; accelerations come from the forward dynamics at the interpolated
    state and torque.
    """

    grid: KnotGrid
    X: np.ndarray
    U: np.ndarray
    model: RobotModel = field(repr=False)

    @property
    def t_f(self) -> float:
        return self.grid.t_f

    def sample(self, t):
        n = self.model.n
        x = barycentric_eval(self.grid, self.X, t)
        u = barycentric_eval(self.grid, self.U, t)
        q, qd = x[..., :n], x[..., n:]
        qdd = forward_dynamics(self.model, q, qd, u)
        return q, qd, qdd, u

    def dense(self, num: int = 1000):
        """Samples on a uniform increasing time grid from 0 to ``t_f``."""
        if num < 2:
            raise ValueError("need at least two samples")
        t = np.linspace(0.0, self.t_f, num)
        return (t,) + self.sample(t)

    def torque_rate(self, t):
        D = diff_matrix(self.grid).entries
        return barycentric_eval(self.grid, (2.0 / self.t_f) * (D @ self.U), t)


def _transcription_for(model, z, scenario=None, world=None):
    size = ad.value(z).size
    K, rem = divmod(size - 1, 3 * model.n)
    if rem or K < 2:
        raise ValueError(f"decision vector of length {size} does not fit a {model.n}-joint robot")
    if scenario is None:
        zero = np.zeros(model.n)
        scenario = Scenario(q0=np.clip(zero, model.q_min, model.q_max), qf=np.clip(zero, model.q_min, model.q_max), N=max(K - 1, 3))
    if scenario.N != K - 1:
        raise ValueError(f"scenario uses N={scenario.N}, decision vector implies N={K - 1}")
    return Transcription(model, scenario, world)


def initial_guess(model: RobotModel, scenario: Scenario) -> np.ndarray:
    return Transcription(model, scenario).initial_guess()


def cost(model: RobotModel, scenario: Scenario, z):
    return _transcription_for(model, z, scenario).cost(z)


def dynamics_defects(model: RobotModel, z):
    """``D X - (t_f / 2) F`` as an ``(N+1, 2n)`` residual matrix."""
    size = ad.value(z).size
    K = (size - 1) // (3 * model.n)
    if K < 4:
        # scenarios need N >= 3; build the pieces directly for tiny grids
        if 1 + 3 * model.n * K != size or K < 2:
            raise ValueError(f"decision vector of length {size} does not fit a {model.n}-joint robot")
        D = diff_matrix(chebyshev_knots(K - 1, 1.0)).entries
        n = model.n
        t_f = z[0]
        X = ad.reshape(z[1 : 1 + 2 * n * K], (K, 2 * n))
        U = ad.reshape(z[1 + 2 * n * K :], (K, n))
        return ad.matmul(D, X) - state_derivative(model, X, U) * (t_f / 2.0)
    return _transcription_for(model, z).dynamics_defects(z)


def path_constraint_values(model: RobotModel, world: CollisionWorld, scenario: Scenario, z):
    return _transcription_for(model, z, scenario, world).path_constraint_values(z)


def boundary_constraint_values(model: RobotModel, scenario: Scenario, z):
    return _transcription_for(model, z, scenario).boundary_constraint_values(z)


def extract_trajectory(model: RobotModel, grid, z) -> Trajectory:
    """Trajectory for decision vector ``z``; ``grid`` supplies ``N`` (an int also works)."""
    N = grid.N if isinstance(grid, KnotGrid) else int(grid)
    z = np.asarray(z, dtype=float)
    n, K = model.n, N + 1
    if z.size != 1 + 3 * n * K:
        raise ValueError("decision vector does not match the grid size")
    t_f = float(z[0])
    X = z[1 : 1 + 2 * n * K].reshape(K, 2 * n)
    U = z[1 + 2 * n * K :].reshape(K, n)
    return Trajectory(grid=chebyshev_knots(N, t_f), X=X, U=U, model=model)


def sample(traj: Trajectory, t):
    return traj.sample(t)
