"""Chebyshev-Lobatto grids, barycentric interpolation, Clenshaw-Curtis
quadrature and the spectral differentiation matrix.

Knots are kept in descending time order, ``T_0 = t_f`` down to ``T_N = 0``.
Every per-knot array in the package uses that row order.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "KnotGrid",
    "DiffMatrix",
    "QuadWeights",
    "chebyshev_knots",
    "diff_matrix",
    "clenshaw_curtis_weights",
    "barycentric_eval",
    "interpolation_matrix",
]


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class KnotGrid:
    """Chebyshev-Lobatto grid on ``[0, t_f]`` with ``N + 1`` points."""

    N: int
    t_f: float
    knots: np.ndarray
    bary_weights: np.ndarray

    @property
    def reference_points(self) -> np.ndarray:
        """Knots mapped back to ``[-1, 1]``, i.e. ``cos(i*pi/N)``."""
        return _frozen(np.cos(np.pi * np.arange(self.N + 1) / self.N))

    def scaled(self, t_f: float) -> "KnotGrid":
        return chebyshev_knots(self.N, t_f)


@dataclass(frozen=True)
class DiffMatrix:
    """Differentiation matrix on the reference interval ``[-1, 1]``.

    Physical-time derivatives of knot data ``V`` are ``(2 / t_f) * D @ V``.
    """

    entries: np.ndarray

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)

    def __matmul__(self, other):
        return self.entries @ other

    @property
    def shape(self):
        return self.entries.shape


@dataclass(frozen=True)
class QuadWeights:
    """Clenshaw-Curtis weights on ``[0, t_f]``, one per knot."""

    weights: np.ndarray

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.weights, dtype=dtype)

    def integrate(self, values) -> np.ndarray:
        return np.tensordot(self.weights, np.asarray(values, dtype=float), axes=(0, 0))


def chebyshev_knots(N: int, t_f: float) -> KnotGrid:
    if int(N) != N or N < 1:
        raise ValueError(f"N must be an integer >= 1, got {N!r}")
    if not np.isfinite(t_f) or t_f <= 0:
        raise ValueError(f"t_f must be positive, got {t_f!r}")
    N = int(N)
    knots = 0.5 * t_f * (np.cos(np.pi * np.arange(N + 1) / N) + 1.0)
    # Mirror the upper half: t_f - T_i is exact for T_i >= t_f / 2, so the
    # grid is symmetric about t_f / 2 without rounding error.
    half = (N + 1) // 2
    knots[0] = t_f
    knots[N - half + 1 :] = t_f - knots[:half][::-1]
    if N % 2 == 0:
        knots[N // 2] = 0.5 * t_f
    w = np.ones(N + 1)
    w[1::2] = -1.0
    w[0] *= 0.5
    w[-1] *= 0.5
    return KnotGrid(N=N, t_f=float(t_f), knots=_frozen(knots), bary_weights=_frozen(w))


def diff_matrix(grid: KnotGrid) -> DiffMatrix:
    """Barycentric differentiation matrix for the grid's reference points.

    Off-diagonal entries are ``(w_j / w_i) / (x_i - x_j)``; the diagonal is
    filled with the negative row sum so constants are differentiated to zero
    exactly.
    """
    x = grid.reference_points
    w = grid.bary_weights
    dx = x[:, None] - x[None, :]
    np.fill_diagonal(dx, 1.0)
    D = (w[None, :] / w[:, None]) / dx
    np.fill_diagonal(D, 0.0)
    np.fill_diagonal(D, -D.sum(axis=1))
    return DiffMatrix(_frozen(D))


def clenshaw_curtis_weights(grid: KnotGrid) -> QuadWeights:
    """Integrals of the Lagrange basis over ``[0, t_f]``.

    Evaluated through the cosine series of the basis functions, which gives
    the weights in closed form without solving a moment system.
    """
    N = grid.N
    theta = np.pi * np.arange(N + 1) / N
    w = np.zeros(N + 1)
    if N == 1:
        w[:] = 1.0
    else:
        v = np.ones(N - 1)
        th = theta[1:-1]
        if N % 2 == 0:
            w[0] = w[N] = 1.0 / (N**2 - 1)
            for k in range(1, N // 2):
                v -= 2.0 * np.cos(2 * k * th) / (4 * k**2 - 1)
            v -= np.cos(N * th) / (N**2 - 1)
        else:
            w[0] = w[N] = 1.0 / N**2
            for k in range(1, (N - 1) // 2 + 1):
                v -= 2.0 * np.cos(2 * k * th) / (4 * k**2 - 1)
        w[1:-1] = 2.0 * v / N
    # enforce exact mirror symmetry
    w = 0.5 * (w + w[::-1])
    return QuadWeights(_frozen(0.5 * grid.t_f * w))


def _check_times(grid: KnotGrid, t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    slack = 1e-12 * grid.t_f
    if np.any(~np.isfinite(t)) or np.any(t < -slack) or np.any(t > grid.t_f + slack):
        raise ValueError(f"query time outside [0, {grid.t_f}]")
    return np.clip(t, 0.0, grid.t_f)


def interpolation_matrix(grid: KnotGrid, t) -> np.ndarray:
    """Rows of Lagrange basis values ``l_j(t)`` for each query time.

    A query that coincides with a knot yields the corresponding unit row.
    """
    t = np.atleast_1d(_check_times(grid, t))
    diff = t[:, None] - np.asarray(grid.knots)[None, :]
    # within rounding distance of a knot: snap to the unit row
    adiff = np.abs(diff)
    nearest = np.argmin(adiff, axis=1)
    hit = adiff[np.arange(len(t)), nearest] <= 1e-14 * grid.t_f
    diff[hit] = 1.0
    c = np.asarray(grid.bary_weights)[None, :] / diff
    with np.errstate(divide="ignore", invalid="ignore"):
        # snapped rows are overwritten below
        L = c / c.sum(axis=1, keepdims=True)
    L[hit] = 0.0
    L[np.flatnonzero(hit), nearest[hit]] = 1.0
    return L


def barycentric_eval(grid: KnotGrid, values, t):
    """Evaluate the degree-``N`` interpolant of ``values`` at time(s) ``t``.

    ``values`` has ``N + 1`` rows; any trailing shape is interpolated
    componentwise. Scalar ``t`` returns one sample, array ``t`` stacks them.
    """
    values = np.asarray(values, dtype=float)
    if values.shape[0] != grid.N + 1:
        raise ValueError(f"expected {grid.N + 1} samples, got {values.shape[0]}")
    scalar = np.ndim(t) == 0
    L = interpolation_matrix(grid, t)
    out = np.tensordot(L, values, axes=(1, 0))
    return out[0] if scalar else out
