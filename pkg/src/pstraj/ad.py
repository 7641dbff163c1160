"""Forward-mode automatic differentiation on array-valued dual numbers.

A :class:`Dual` carries a value array of shape ``S`` and a tangent array of
shape ``S + (P,)``; the trailing axis holds ``P`` directional derivatives
propagated together.  Model code is written against the helper functions
in this module (``sin``, ``matmul``, ``stack`` ...) which dispatch to plain
numpy when handed ordinary arrays, so the same routine runs on floats and on
duals.

Numpy ufuncs are deliberately disabled on duals (``__array_ufunc__ = None``):
calling ``np.sin`` on a dual raises ``TypeError`` instead of silently dropping
the derivative.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "Dual",
    "DifferentiableFunction",
    "EvaluationError",
    "jacobian",
    "gradient",
    "value",
    "is_dual",
    "sin",
    "cos",
    "tanh",
    "sqrt",
    "exp",
    "square",
    "stack",
    "concatenate",
    "matmul",
    "matvec",
    "cross",
    "dot",
    "sum",
    "swap_last",
    "reshape",
    "solve",
]

DEFAULT_BATCH = 8


class EvaluationError(ArithmeticError):
    """Non-finite value or derivative produced while differentiating."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


def _tail(idx):
    if not isinstance(idx, tuple):
        idx = (idx,)
    return idx + (slice(None),)


class Dual:
    __slots__ = ("val", "dot")
    __array_ufunc__ = None

    def __init__(self, val, dot):
        self.val = np.asarray(val, dtype=float)
        self.dot = np.asarray(dot, dtype=float)
        if self.dot.shape[:-1] != self.val.shape:
            raise ValueError(
                f"tangent shape {self.dot.shape} does not extend value shape {self.val.shape}"
            )

    @classmethod
    def constant(cls, val, width: int) -> "Dual":
        val = np.asarray(val, dtype=float)
        return cls(val, np.zeros(val.shape + (width,)))

    @property
    def width(self) -> int:
        return self.dot.shape[-1]

    @property
    def shape(self):
        return self.val.shape

    @property
    def ndim(self):
        return self.val.ndim

    def __len__(self):
        return len(self.val)

    def __repr__(self):
        return f"Dual(val={self.val!r}, width={self.width})"

    def __float__(self):
        raise TypeError("refusing to drop derivative information of a Dual")

    def __getitem__(self, idx):
        return Dual(self.val[idx], self.dot[_tail(idx)])

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    def __neg__(self):
        return Dual(-self.val, -self.dot)

    def __pos__(self):
        return self

    def __add__(self, other):
        if isinstance(other, Dual):
            return Dual(self.val + other.val, self.dot + other.dot)
        other = np.asarray(other, dtype=float)
        v = self.val + other
        return Dual(v, np.broadcast_to(self.dot, v.shape + (self.width,)))

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Dual):
            return Dual(self.val - other.val, self.dot - other.dot)
        other = np.asarray(other, dtype=float)
        v = self.val - other
        return Dual(v, np.broadcast_to(self.dot, v.shape + (self.width,)))

    def __rsub__(self, other):
        other = np.asarray(other, dtype=float)
        v = other - self.val
        return Dual(v, np.broadcast_to(-self.dot, v.shape + (self.width,)))

    def __mul__(self, other):
        if isinstance(other, Dual):
            return Dual(
                self.val * other.val,
                self.dot * other.val[..., None] + self.val[..., None] * other.dot,
            )
        other = np.asarray(other, dtype=float)
        return Dual(self.val * other, self.dot * other[..., None])

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Dual):
            q = self.val / other.val
            return Dual(q, (self.dot - q[..., None] * other.dot) / other.val[..., None])
        other = np.asarray(other, dtype=float)
        return Dual(self.val / other, self.dot / other[..., None])

    def __rtruediv__(self, other):
        other = np.asarray(other, dtype=float)
        q = other / self.val
        return Dual(q, -(q / self.val)[..., None] * self.dot)

    def __pow__(self, p):
        if isinstance(p, Dual):
            raise TypeError("dual exponent is not supported")
        p = float(p)
        if p == 2.0:
            return Dual(self.val * self.val, 2.0 * self.val[..., None] * self.dot)
        return Dual(self.val**p, (p * self.val ** (p - 1.0))[..., None] * self.dot)

    @property
    def T(self):
        axes = tuple(range(self.ndim))[::-1]
        return Dual(self.val.transpose(axes), self.dot.transpose(axes + (self.ndim,)))

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], tuple):
            shape = shape[0]
        v = self.val.reshape(shape)
        return Dual(v, self.dot.reshape(v.shape + (self.width,)))

    def ravel(self):
        return self.reshape(-1)

    def sum(self, axis=None):
        return sum(self, axis=axis)


def is_dual(x) -> bool:
    return isinstance(x, Dual)


def value(x):
    """Value part of a dual, or the argument itself as an array."""
    return x.val if isinstance(x, Dual) else np.asarray(x, dtype=float)


def _unary(f, df):
    def op(x):
        if isinstance(x, Dual):
            return Dual(f(x.val), df(x.val)[..., None] * x.dot)
        return f(np.asarray(x, dtype=float))

    return op


sin = _unary(np.sin, np.cos)
cos = _unary(np.cos, lambda v: -np.sin(v))
tanh = _unary(np.tanh, lambda v: 1.0 - np.tanh(v) ** 2)
exp = _unary(np.exp, np.exp)


def sqrt(x):
    if isinstance(x, Dual):
        r = np.sqrt(x.val)
        return Dual(r, (0.5 / r)[..., None] * x.dot)
    return np.sqrt(np.asarray(x, dtype=float))


def square(x):
    return x * x


def _width(items):
    for it in items:
        if isinstance(it, Dual):
            return it.width
    return None


def _lift(x, width):
    return x if isinstance(x, Dual) else Dual.constant(x, width)


def _axis(axis, ndim):
    return axis if axis >= 0 else axis + ndim


def stack(items, axis=0):
    items = list(items)
    width = _width(items)
    if width is None:
        return np.stack([np.asarray(i, dtype=float) for i in items], axis=axis)
    items = [_lift(i, width) for i in items]
    ax = _axis(axis, items[0].ndim + 1)
    return Dual(
        np.stack([i.val for i in items], axis=ax),
        np.stack([i.dot for i in items], axis=ax),
    )


def concatenate(items, axis=0):
    items = list(items)
    width = _width(items)
    if width is None:
        return np.concatenate([np.asarray(i, dtype=float) for i in items], axis=axis)
    items = [_lift(i, width) for i in items]
    ax = _axis(axis, items[0].ndim)
    return Dual(
        np.concatenate([i.val for i in items], axis=ax),
        np.concatenate([i.dot for i in items], axis=ax),
    )


def sum(x, axis=None):  # noqa: A001 - mirrors numpy naming
    if not isinstance(x, Dual):
        return np.sum(x, axis=axis)
    if axis is None:
        return Dual(x.val.sum(), x.dot.reshape(-1, x.width).sum(axis=0))
    ax = _axis(axis, x.ndim)
    return Dual(x.val.sum(axis=ax), x.dot.sum(axis=ax))


def swap_last(x):
    """Transpose the last two value axes (batched matrix transpose)."""
    if isinstance(x, Dual):
        return Dual(np.swapaxes(x.val, -1, -2), np.swapaxes(x.dot, -2, -3))
    return np.swapaxes(x, -1, -2)


def reshape(x, shape):
    if isinstance(x, Dual):
        return x.reshape(shape)
    return np.reshape(x, shape)


def matmul(a, b):
    """Batched ``a @ b`` with at least 2-D operands on both sides."""
    da, db = isinstance(a, Dual), isinstance(b, Dual)
    if not (da or db):
        return np.matmul(a, b)
    av, bv = value(a), value(b)
    v = np.matmul(av, bv)
    t = 0.0
    if da:
        t = t + np.einsum("...ijp,...jk->...ikp", a.dot, bv)
    if db:
        t = t + np.einsum("...ij,...jkp->...ikp", av, b.dot)
    return Dual(v, t)


def matvec(A, x):
    """Batched matrix-vector product ``A[..., i, j] x[..., j]``."""
    dA, dx = isinstance(A, Dual), isinstance(x, Dual)
    if not (dA or dx):
        return np.einsum("...ij,...j->...i", A, x)
    Av, xv = value(A), value(x)
    v = np.einsum("...ij,...j->...i", Av, xv)
    t = 0.0
    if dA:
        t = t + np.einsum("...ijp,...j->...ip", A.dot, xv)
    if dx:
        t = t + np.einsum("...ij,...jp->...ip", Av, x.dot)
    return Dual(v, t)


def dot(a, b):
    """Inner product along the last axis."""
    return sum(a * b, axis=-1)


def cross(a, b):
    """Cross product along the last axis (length 3)."""
    if not (isinstance(a, Dual) or isinstance(b, Dual)):
        return np.cross(a, b)
    a0, a1, a2 = a[..., 0], a[..., 1], a[..., 2]
    b0, b1, b2 = b[..., 0], b[..., 1], b[..., 2]
    return stack([a1 * b2 - a2 * b1, a2 * b0 - a0 * b2, a0 * b1 - a1 * b0], axis=-1)


def solve(A, b):
    """Batched ``A^{-1} b`` for a trailing vector ``b``.

    Tangents follow ``d(A^{-1} b) = A^{-1} (db - dA A^{-1} b)``.
    """
    dA, db = isinstance(A, Dual), isinstance(b, Dual)
    Av, bv = value(A), value(b)
    x = np.linalg.solve(Av, bv[..., None])[..., 0]
    if not (dA or db):
        return x
    width = A.width if dA else b.width
    rhs = np.zeros(bv.shape + (width,))
    if db:
        rhs = rhs + b.dot
    if dA:
        rhs = rhs - np.einsum("...ijp,...j->...ip", A.dot, x)
    return Dual(x, np.linalg.solve(Av, rhs))


@dataclass(frozen=True)
class DifferentiableFunction:
    """A vector function written against this module's scalar-generic ops."""

    n_in: int
    n_out: int
    fn: Callable

    def __call__(self, z):
        return self.fn(z)


def _check_finite(val, tangents, offset=0):
    bad = ~np.isfinite(val)
    if tangents is not None:
        bad = bad | ~np.all(np.isfinite(tangents), axis=-1)
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise EvaluationError(f"non-finite value at output index {i + offset}", index=i + offset)


def jacobian(f, z, batch: int | None = DEFAULT_BATCH) -> np.ndarray:
    """Dense Jacobian of ``f`` at ``z`` by batched forward sweeps.

    Each sweep seeds ``batch`` unit directions; ``batch=None`` differentiates
    all inputs in a single sweep.
    """
    z = np.asarray(z, dtype=float).ravel()
    n = z.size
    fn = f.fn if isinstance(f, DifferentiableFunction) else f
    width = n if batch is None else max(1, min(int(batch), n))
    cols = []
    m = None
    for start in range(0, n, width):
        stop = min(start + width, n)
        seed = np.zeros((n, stop - start))
        seed[np.arange(start, stop), np.arange(stop - start)] = 1.0
        out = fn(Dual(z, seed))
        if isinstance(out, Dual):
            val = out.val.ravel()
            tan = out.dot.reshape(val.size, -1)
        else:
            val = np.asarray(out, dtype=float).ravel()
            tan = np.zeros((val.size, stop - start))
        _check_finite(val, tan)
        m = val.size
        cols.append(tan)
    if n == 0:
        raise ValueError("cannot differentiate with respect to an empty input")
    return np.concatenate(cols, axis=1).reshape(m, n)


def gradient(f, z, batch: int | None = DEFAULT_BATCH) -> np.ndarray:
    """Gradient of a scalar function; see :func:`jacobian`."""
    J = jacobian(f, z, batch=batch)
    if J.shape[0] != 1:
        raise ValueError(f"gradient needs a scalar function, got {J.shape[0]} outputs")
    return J[0]
