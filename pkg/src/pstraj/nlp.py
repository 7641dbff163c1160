"""Primal-dual interior-point solver for smooth nonlinear programs.

Solves ``min f(x)`` subject to ``cl <= c(x) <= cu`` and ``xl <= x <= xu``.
Rows with ``cl == cu`` are equalities; every other row gets a slack variable
bounded by ``[cl, cu]``.  First derivatives come from :mod:`pstraj.ad`; the
Lagrangian Hessian is approximated by damped BFGS.  Sign convention for
multipliers: ``L = f + y^T c - zl^T (x - xl) - zu^T (xu - x)``.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, TextIO

import numpy as np
from scipy.linalg import lapack

from . import ad

__all__ = [
    "NLPSpec",
    "SolverOptions",
    "Multipliers",
    "KKTResiduals",
    "SolveResult",
    "solve",
    "kkt_residuals",
]

INF = 1e19  # bounds at or beyond this magnitude are treated as absent


@dataclass(frozen=True)
class NLPSpec:
    """Problem data.

    ``objective`` and ``constraints`` are written against :mod:`pstraj.ad`
    so they can be differentiated; ``fused`` optionally returns
    ``[f, c...]`` in one vector so a single sweep yields every derivative.
    ``x_scale`` gives a typical magnitude per variable; the solver iterates
    on ``x / x_scale`` internally.
    """

    n: int
    objective: Callable
    constraints: Callable | None = None
    cl: np.ndarray | None = None
    cu: np.ndarray | None = None
    xl: np.ndarray | None = None
    xu: np.ndarray | None = None
    fused: Callable | None = None
    jac_batch: int | None = ad.DEFAULT_BATCH
    x_scale: np.ndarray | None = None

    def __post_init__(self):
        n = int(self.n)
        xl = np.full(n, -np.inf) if self.xl is None else np.array(self.xl, dtype=float).ravel()
        xu = np.full(n, np.inf) if self.xu is None else np.array(self.xu, dtype=float).ravel()
        if xl.shape != (n,) or xu.shape != (n,):
            raise ValueError("variable bounds must have length n")
        if np.any(xl > xu):
            raise ValueError("variable lower bound exceeds upper bound")
        cl = np.zeros(0) if self.cl is None else np.array(self.cl, dtype=float).ravel()
        cu = np.zeros(0) if self.cu is None else np.array(self.cu, dtype=float).ravel()
        if cl.shape != cu.shape:
            raise ValueError("constraint bound vectors differ in length")
        if np.any(cl > cu):
            raise ValueError("constraint lower bound exceeds upper bound")
        if cl.size and self.constraints is None:
            raise ValueError("constraint bounds given without a constraint function")
        sx = np.ones(n) if self.x_scale is None else np.array(self.x_scale, dtype=float).ravel()
        if sx.shape != (n,) or np.any(~(sx > 0)) or np.any(~np.isfinite(sx)):
            raise ValueError("x_scale must hold n positive finite entries")
        for name, v in (("xl", xl), ("xu", xu), ("cl", cl), ("cu", cu), ("x_scale", sx)):
            v.setflags(write=False)
            object.__setattr__(self, name, v)
        object.__setattr__(self, "n", n)

    @property
    def m(self) -> int:
        return self.cl.size

    def evaluate(self, x):
        """Objective value and constraint vector at ``x``."""
        if self.fused is not None:
            out = np.asarray(self.fused(x), dtype=float)
            return float(out[0]), out[1:]
        f = float(np.asarray(self.objective(x)))
        c = np.asarray(self.constraints(x), dtype=float).ravel() if self.constraints is not None else np.zeros(0)
        return f, c

    def _stacked(self, z):
        if self.fused is not None:
            return self.fused(z)
        parts = [ad.reshape(self.objective(z), (1,))]
        if self.constraints is not None:
            parts.append(ad.reshape(self.constraints(z), (-1,)))
        return ad.concatenate(parts)

    def derivatives(self, x):
        """``(f, grad f, c, dc/dx)`` from one set of forward sweeps."""
        x = np.asarray(x, dtype=float)
        val = np.asarray(self._stacked(x), dtype=float)
        J = ad.jacobian(self._stacked, x, batch=self.jac_batch)
        return float(val[0]), J[0], val[1:], J[1:]


@dataclass
class SolverOptions:
    tol: float = 1e-6
    max_iter: int = 500
    mu_init: float = 0.1
    mu_factor: float = 0.2
    fraction_to_boundary: float = 0.995
    armijo: float = 1e-4
    max_gradient: float = 100.0
    log: TextIO | None = None

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if not 0 < self.mu_factor < 1:
            raise ValueError("mu_factor must lie in (0, 1)")
        if not 0 < self.fraction_to_boundary < 1:
            raise ValueError("fraction_to_boundary must lie in (0, 1)")
        if self.max_iter < 0:
            raise ValueError("max_iter must be non-negative")


@dataclass(frozen=True)
class Multipliers:
    constraints: np.ndarray
    lower: np.ndarray
    upper: np.ndarray


@dataclass(frozen=True)
class KKTResiduals:
    stationarity: float
    feasibility: float
    complementarity: float

    def max(self) -> float:
        return max(self.stationarity, self.feasibility, self.complementarity)


@dataclass
class SolveResult:
    x: np.ndarray
    multipliers: Multipliers
    status: str
    iterations: int
    residuals: KKTResiduals
    wall_time: float
    objective: float
    mu_history: list = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return self.status == "converged"


def _dual_scale(values, count, s_max=100.0):
    if count == 0:
        return 1.0
    return max(s_max, sum(float(np.abs(v).sum()) for v in values) / count) / s_max


def kkt_residuals(spec: NLPSpec, x, multipliers: Multipliers) -> KKTResiduals:
    """Infinity-norm KKT residuals of the original (unscaled) problem.

    Stationarity and complementarity are divided by the usual multiplier
    magnitude factor ``max(100, mean |multiplier|) / 100``.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (spec.n,):
        raise ValueError(f"x must have length {spec.n}")
    y = np.asarray(multipliers.constraints, dtype=float)
    zl = np.asarray(multipliers.lower, dtype=float)
    zu = np.asarray(multipliers.upper, dtype=float)
    if y.shape != (spec.m,) or zl.shape != (spec.n,) or zu.shape != (spec.n,):
        raise ValueError("multiplier dimensions do not match the problem")
    _, g, c, J = spec.derivatives(x)
    grad_l = g + (J.T @ y if spec.m else 0.0) - zl + zu
    s = _dual_scale([y, zl, zu], spec.m + 2 * spec.n)
    stationarity = float(np.max(np.abs(grad_l), initial=0.0)) / s

    viol = [np.maximum(spec.xl - x, 0.0), np.maximum(x - spec.xu, 0.0)]
    if spec.m:
        viol += [np.maximum(spec.cl - c, 0.0), np.maximum(c - spec.cu, 0.0)]
    feasibility = float(max(np.max(v, initial=0.0) for v in viol))

    terms = []
    has_xl, has_xu = spec.xl > -INF, spec.xu < INF
    terms.append(np.where(has_xl, np.abs(zl * (x - np.where(has_xl, spec.xl, 0.0))), np.abs(zl)))
    terms.append(np.where(has_xu, np.abs(zu * (np.where(has_xu, spec.xu, 0.0) - x)), np.abs(zu)))
    terms.append(np.maximum(-zl, 0.0))
    terms.append(np.maximum(-zu, 0.0))
    if spec.m:
        eq = spec.cl == spec.cu
        has_cl, has_cu = (spec.cl > -INF) & ~eq, (spec.cu < INF) & ~eq
        y_lo, y_up = np.maximum(-y, 0.0), np.maximum(y, 0.0)
        lo_term = np.where(has_cl, np.abs(y_lo * (c - np.where(has_cl, spec.cl, 0.0))), y_lo)
        up_term = np.where(has_cu, np.abs(y_up * (np.where(has_cu, spec.cu, 0.0) - c)), y_up)
        terms += [np.where(eq, 0.0, lo_term), np.where(eq, 0.0, up_term)]
    complementarity = float(max(np.max(t, initial=0.0) for t in terms)) / s
    return KKTResiduals(stationarity, feasibility, complementarity)


class _Factor:
    """Symmetric indefinite (Bunch-Kaufman) factorization, reusable for several solves."""

    def __init__(self, K):
        self.lu, self.piv, info = lapack.dsytrf(K, lower=1)
        if info > 0:
            raise np.linalg.LinAlgError("singular KKT matrix")

    def solve(self, rhs):
        x, info = lapack.dsytrs(self.lu, self.piv, rhs, lower=1)
        if info != 0:
            raise np.linalg.LinAlgError("KKT solve failed")
        return x


class _CondensedKKT:
    """Primal-dual Newton system with the slack block eliminated.

    Full system in ``(dx, ds, dy_E, dy_I)``::

        [H + Sx          J_E'   J_I'] [dx ]   [r_x]
        [        Ss             -I  ] [ds ] = [r_s]
        [J_E          -dc           ] [dyE]   [r_E]
        [J_I     -I           -dc   ] [dyI]   [r_I]

    Slacks and inequality multipliers are eliminated, leaving a
    quasi-definite system of size ``n + m_E``.
    """

    def __init__(self, solver, B, sig, J_s):
        n = solver.spec.n
        self.s = solver
        self.n = n
        self.E, self.I = solver.eq, solver.ineq
        self.sig_x = sig[:n]
        self.sig_s = sig[n:]
        dc = solver.delta_c
        self.dinv = 1.0 / (1.0 / self.sig_s + dc)
        self.JE, self.JI = J_s[self.E], J_s[self.I]
        mE = self.E.size
        K = np.empty((n + mE, n + mE))
        H = B + np.diag(self.sig_x) + self.JI.T @ (self.dinv[:, None] * self.JI)
        K[:n, :n] = H
        K[n:, :n] = self.JE
        K[:n, n:] = self.JE.T
        K[n:, n:] = -dc * np.eye(mE)
        try:
            self.fac = _Factor(K)
        except np.linalg.LinAlgError:
            K[:n, :n] += 1e-8 * np.eye(n)
            self.fac = _Factor(K)

    def solve(self, r_w, r_h):
        """Solve for ``(dw, dy)`` given the stationarity and residual right-hand sides."""
        n = self.n
        r_x, r_s = r_w[:n], r_w[n:]
        r_E, r_I = r_h[self.E], r_h[self.I]
        t = r_s / self.sig_s + r_I
        rhs = np.concatenate([r_x + self.JI.T @ (self.dinv * t), r_E])
        sol = self.fac.solve(rhs)
        dx, dyE = sol[:n], sol[n:]
        dyI = self.dinv * (self.JI @ dx - t)
        ds = (r_s + dyI) / self.sig_s
        dy = np.zeros(r_h.size)
        dy[self.E] = dyE
        dy[self.I] = dyI
        return np.concatenate([dx, ds]), dy


class _Solver:
    kappa_eps = 10.0
    kappa_sigma = 1e10
    delta_c = 1e-9
    alpha_min = 1e-12
    reg_floor = 1e-4

    def __init__(self, spec: NLPSpec, opts: SolverOptions):
        self.spec, self.opts = spec, opts
        n, m = spec.n, spec.m
        self.eq = np.flatnonzero(spec.cl == spec.cu)
        self.ineq = np.flatnonzero((spec.cl != spec.cu) & ((spec.cl > -INF) | (spec.cu < INF)))
        self.free = np.flatnonzero((spec.cl <= -INF) & (spec.cu >= INF))
        self.nI = self.ineq.size
        self.nw = n + self.nI
        self.sx = spec.x_scale

    def _derivatives(self, xt):
        f, g, c, J = self.spec.derivatives(xt * self.sx)
        return f, g * self.sx, c, J * self.sx[None, :]

    def _evaluate(self, xt):
        return self.spec.evaluate(xt * self.sx)

    # -- setup ----------------------------------------------------------------
    def _push(self, v, lo, hi):
        k1 = k2 = 1e-2
        has_lo, has_hi = lo > -INF, hi < INF
        pl = np.where(has_lo, np.minimum(k1 * np.maximum(1.0, np.abs(lo)), k2 * np.where(has_hi, hi - lo, np.inf)), 0.0)
        pu = np.where(has_hi, np.minimum(k1 * np.maximum(1.0, np.abs(hi)), k2 * np.where(has_lo, hi - lo, np.inf)), 0.0)
        v = np.where(has_lo, np.maximum(v, lo + pl), v)
        v = np.where(has_hi, np.minimum(v, hi - pu), v)
        fixed = has_lo & has_hi & (hi - lo <= 0)
        return np.where(fixed, lo, v)

    def setup(self, x0):
        spec, opts = self.spec, self.opts
        x0 = np.asarray(x0, dtype=float).ravel()
        if x0.shape != (spec.n,):
            raise ValueError(f"starting point must have length {spec.n}")
        if np.any(spec.xl == spec.xu):
            raise ValueError("fixed variables (xl == xu) are not supported; remove them from the problem")
        xl, xu = spec.xl / self.sx, spec.xu / self.sx
        x = self._push(np.clip(x0 / self.sx, xl, xu), xl, xu)
        try:
            f, g, c, J = self._derivatives(x)
        except ad.EvaluationError as exc:
            raise ValueError(f"problem is not finite at the starting point ({exc})") from None
        if not np.isfinite(f) or not np.all(np.isfinite(c)):
            raise ValueError("objective or constraints are not finite at the starting point")
        if not np.all(np.isfinite(g)) or not np.all(np.isfinite(J)):
            raise ValueError("derivatives are not finite at the starting point")
        gmax = opts.max_gradient
        self.df = min(1.0, gmax / max(np.max(np.abs(g), initial=0.0), 1e-300))
        rows = np.max(np.abs(J), axis=1, initial=0.0) if spec.m else np.zeros(0)
        self.dc = np.minimum(1.0, gmax / np.maximum(rows, 1e-300))
        self.cl_s, self.cu_s = spec.cl * self.dc, spec.cu * self.dc
        self.wl = np.concatenate([xl, self.cl_s[self.ineq]])
        self.wu = np.concatenate([xu, self.cu_s[self.ineq]])
        self.has_l, self.has_u = self.wl > -INF, self.wu < INF
        self.wl_f = np.where(self.has_l, self.wl, 0.0)
        self.wu_f = np.where(self.has_u, self.wu, 0.0)
        s = self._push(c[self.ineq] * self.dc[self.ineq], self.wl[spec.n :], self.wu[spec.n :])
        w = np.concatenate([x, s])
        return w, (f, g, c, J)

    # -- scaled quantities -------------------------------------------------------
    def scaled(self, raw):
        f, g, c, J = raw
        return f * self.df, g * self.df, c * self.dc, J * self.dc[:, None]

    def residual(self, w, c_s):
        n = self.spec.n
        h = c_s.copy()
        h[self.eq] -= self.cl_s[self.eq]
        h[self.ineq] -= w[n:]
        h[self.free] = 0.0
        return h

    def jac_w(self, J_s):
        n, m = self.spec.n, self.spec.m
        A = np.zeros((m, self.nw))
        A[:, :n] = J_s
        A[self.free, :n] = 0.0
        A[self.ineq, n + np.arange(self.nI)] = -1.0
        return A

    def grad_w(self, g_s):
        return np.concatenate([g_s, np.zeros(self.nI)])

    def barrier(self, w, mu):
        dl = w - self.wl_f
        du = self.wu_f - w
        return -mu * (np.sum(np.log(dl[self.has_l])) + np.sum(np.log(du[self.has_u])))

    def errors(self, w, gw, A, h, y, zl, zu, mu):
        dual = gw + A.T @ y - zl + zu
        sd = _dual_scale([y, zl, zu], y.size + 2 * self.nw)
        cl = np.where(self.has_l, (w - self.wl_f) * zl - mu, 0.0)
        cu = np.where(self.has_u, (self.wu_f - w) * zu - mu, 0.0)
        return max(
            np.max(np.abs(dual), initial=0.0) / sd,
            np.max(np.abs(h), initial=0.0),
            max(np.max(np.abs(cl), initial=0.0), np.max(np.abs(cu), initial=0.0)) / sd,
        )

    def ftb(self, v, dv, lo_mask, lo, hi_mask, hi, tau):
        """Largest step in (0, 1] keeping ``v`` a fraction ``tau`` inside its bounds."""
        alpha = 1.0
        with np.errstate(divide="ignore", invalid="ignore"):
            neg = lo_mask & (dv < 0)
            if np.any(neg):
                alpha = min(alpha, np.min(-tau * (v[neg] - lo[neg]) / dv[neg]))
            pos = hi_mask & (dv > 0)
            if np.any(pos):
                alpha = min(alpha, np.min(tau * (hi[pos] - v[pos]) / dv[pos]))
        return float(alpha)

    def factor(self, B, sig, J_s):
        return _CondensedKKT(self, B, sig, J_s)

    def original_multipliers(self, y, zl, zu):
        n = self.spec.n
        y_o = y * self.dc / self.df
        y_o[self.free] = 0.0
        return Multipliers(y_o, zl[:n] / (self.df * self.sx), zu[:n] / (self.df * self.sx))

    def log(self, line):
        if self.opts.log is not None:
            self.opts.log.write(line + "\n")

    # -- main loop ---------------------------------------------------------------
    def run(self, x0) -> SolveResult:
        spec, opts = self.spec, self.opts
        start = time.perf_counter()
        n, m, nw = spec.n, spec.m, self.nw
        w, raw = self.setup(x0)
        f_s, g_s, c_s, J_s = self.scaled(raw)
        mu = opts.mu_init
        mu_min = opts.tol / 10.0
        mu_hist = [mu]
        zl = np.where(self.has_l, 1.0, 0.0)
        zu = np.where(self.has_u, 1.0, 0.0)
        A = self.jac_w(J_s)
        gw = self.grad_w(g_s)
        y = np.zeros(m)
        if m:
            y, *_ = np.linalg.lstsq(A.T, -(gw - zl + zu), rcond=None)
            if np.max(np.abs(y), initial=0.0) > 1e3:
                y = np.zeros(m)
        B = np.eye(n)
        first_update = True
        nu = 1.0
        reg = 0.0
        status = "max-iterations"
        failures = 0
        prev = None
        best = None
        it = 0
        self.log(f"{'iter':>4} {'objective':>15} {'inf_pr':>9} {'inf_du':>9} {'lg(mu)':>6} {'alpha':>9}")
        while True:
            x = w[:n]
            h = self.residual(w, c_s)
            if prev is not None:
                # damped BFGS on the x block of the Lagrangian
                x_old, gL_old = prev
                sk = x - x_old
                yk = (g_s + J_s.T @ y) - gL_old
                sy = float(sk @ yk)
                if np.any(sk != 0):
                    if first_update and sy > 0:
                        B = np.eye(n) * max(min(float(yk @ yk) / sy, 1e8), 1e-8)
                        first_update = False
                    Bs = B @ sk
                    sBs = float(sk @ Bs)
                    if sBs > 0:
                        theta = 1.0 if sy >= 0.2 * sBs else 0.8 * sBs / (sBs - sy)
                        r = theta * yk + (1.0 - theta) * Bs
                        sr = float(sk @ r)
                        if sr > 1e-300:
                            B = B - np.outer(Bs, Bs) / sBs + np.outer(r, r) / sr
                            B = 0.5 * (B + B.T)
            mult = self.original_multipliers(y, zl, zu)
            res = kkt_residuals(spec, x * self.sx, mult)
            if best is None or res.feasibility < best[1].feasibility or (
                res.feasibility <= opts.tol and raw[0] < best[3]
            ):
                best = (x * self.sx, res, mult, raw[0])
            while mu > mu_min and self.errors(w, gw, A, h, y, zl, zu, mu) <= self.kappa_eps * mu:
                mu = max(mu_min, min(opts.mu_factor * mu, mu**1.5))
                mu_hist.append(mu)
            if mu <= opts.tol and res.max() <= opts.tol:
                status = "converged"
                break
            if it >= opts.max_iter:
                status = "max-iterations"
                break
            tau = max(opts.fraction_to_boundary, 1.0 - mu)

            dl = np.where(self.has_l, w - self.wl_f, 1.0)
            du = np.where(self.has_u, self.wu_f - w, 1.0)
            sig = np.where(self.has_l, zl / dl, 0.0) + np.where(self.has_u, zu / du, 0.0)
            grad_phi = gw - np.where(self.has_l, mu / dl, 0.0) + np.where(self.has_u, mu / du, 0.0)
            fac = self.factor(B + reg * np.eye(n) if reg else B, sig, J_s)
            dw, dy = fac.solve(-(grad_phi + A.T @ y), -h)

            dzl = np.where(self.has_l, mu / dl - zl - zl / dl * dw, 0.0)
            dzu = np.where(self.has_u, mu / du - zu + zu / du * dw, 0.0)

            alpha_max = self.ftb(w, dw, self.has_l, self.wl_f, self.has_u, self.wu_f, tau)
            alpha_z = min(
                self.ftb(zl, dzl, self.has_l, np.zeros(nw), np.zeros(nw, bool), np.zeros(nw), tau),
                self.ftb(zu, dzu, self.has_u, np.zeros(nw), np.zeros(nw, bool), np.zeros(nw), tau),
            )

            h1 = float(np.abs(h).sum())
            dphi = float(grad_phi @ dw)
            if h1 > 0:
                curv = float(dw[:n] @ B @ dw[:n]) + float(sig @ (dw * dw))
                nu_req = (dphi + 0.5 * curv) / (0.9 * h1)
                # penalty is recomputed each iteration so it can also come back down
                nu = max(nu_req, 0.0) + 1.0
            merit0 = f_s + self.barrier(w, mu) + nu * h1
            slope = dphi - nu * h1

            accepted = None
            alpha = alpha_max
            tried_soc = False
            while alpha >= self.alpha_min:
                w_t = w + alpha * dw
                trial = self._trial(w_t, mu, nu)
                if trial is not None and trial[0] <= merit0 + opts.armijo * alpha * slope:
                    accepted = (w_t, alpha, trial)
                    break
                if not tried_soc and alpha == alpha_max and trial is not None and h1 > 0 and m:
                    tried_soc = True
                    h_t = trial[3]
                    corr = fac.solve(np.zeros(nw), -h_t)[0]
                    d2 = alpha * dw + corr
                    a2 = self.ftb(w, d2, self.has_l, self.wl_f, self.has_u, self.wu_f, tau)
                    if a2 >= 1.0:
                        w2 = w + d2
                        trial2 = self._trial(w2, mu, nu)
                        if trial2 is not None and trial2[0] <= merit0 + opts.armijo * alpha * slope:
                            accepted = (w2, alpha, trial2)
                            break
                alpha *= 0.5

            if accepted is None:
                failures += 1
                self.log(f"{it:4d} line search failed (attempt {failures})")
                if failures == 1 and not np.allclose(B, np.eye(n)):
                    B = np.eye(n)
                    first_update = True
                    prev = None
                    continue
                infeas = res.feasibility
                if infeas > np.sqrt(opts.tol):
                    Ah = A.T @ h
                    if np.max(np.abs(Ah)) <= 1e-4 * max(1.0, np.max(np.abs(h))):
                        status = "infeasible-detected"
                        break
                status = "line-search-failure"
                break
            failures = 0
            w_new, alpha, _ = accepted
            # Heavy backtracking means the quasi-Newton model overreaches: add a
            # Levenberg term to the x block, and relax it again after full steps.
            if alpha < 0.1 * alpha_max:
                reg = max(4.0 * reg, self.reg_floor * max(1.0, float(np.max(np.abs(np.diag(B))))))
            elif alpha >= alpha_max and reg:
                reg = reg / 4.0 if reg > 1e-8 else 0.0
            gL_old = g_s + J_s.T @ (y + alpha * dy)
            prev = (w[:n].copy(), gL_old)
            y = y + alpha * dy
            zl = zl + alpha_z * dzl
            zu = zu + alpha_z * dzu
            w = w_new
            dl = np.where(self.has_l, w - self.wl_f, 1.0)
            du = np.where(self.has_u, self.wu_f - w, 1.0)
            ks = self.kappa_sigma
            zl = np.where(self.has_l, np.clip(zl, mu / (ks * dl), ks * mu / dl), 0.0)
            zu = np.where(self.has_u, np.clip(zu, mu / (ks * du), ks * mu / du), 0.0)
            raw = self._derivatives(w[:n])
            f_s, g_s, c_s, J_s = self.scaled(raw)
            A = self.jac_w(J_s)
            gw = self.grad_w(g_s)
            it += 1
            self.log(
                f"{it:4d} {raw[0]:15.8e} {np.max(np.abs(self.residual(w, c_s)), initial=0.0):9.2e} "
                f"{res.stationarity:9.2e} {np.log10(mu):6.2f} {alpha:9.2e}"
            )

        x = w[:n] * self.sx
        mult = self.original_multipliers(y, zl, zu)
        res = kkt_residuals(spec, x, mult)
        obj = raw[0]
        if status != "converged" and best is not None and best[1].feasibility < res.feasibility:
            x, res, mult, obj = best
        return SolveResult(
            x=x.copy(),
            multipliers=mult,
            status=status,
            iterations=it,
            residuals=res,
            wall_time=time.perf_counter() - start,
            objective=float(obj),
            mu_history=mu_hist,
        )

    def _trial(self, w_t, mu, nu):
        try:
            f, c = self._evaluate(w_t[: self.spec.n])
        except (ValueError, ArithmeticError, np.linalg.LinAlgError):
            return None
        if not np.isfinite(f) or not np.all(np.isfinite(c)):
            return None
        f_s = f * self.df
        c_s = c * self.dc
        h = self.residual(w_t, c_s)
        merit = f_s + self.barrier(w_t, mu) + nu * float(np.abs(h).sum())
        return merit, f_s, c_s, h


def solve(spec: NLPSpec, z0, opts: SolverOptions | None = None) -> SolveResult:
    """Run the interior-point method from ``z0``.

    ``z0`` is clipped into the variable bounds and pushed strictly inside
    before the first iteration.  Raises ``ValueError`` if the problem is not
    finite there.
    """
    return _Solver(spec, opts or SolverOptions()).run(z0)

