import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.polynomial import polynomial as P

from pstraj.specbasis import (
    barycentric_eval,
    chebyshev_knots,
    clenshaw_curtis_weights,
    diff_matrix,
    interpolation_matrix,
)


# -- knots ----------------------------------------------------------------------
def test_knots_n2():
    assert np.allclose(chebyshev_knots(2, 2.0).knots, [2.0, 1.0, 0.0], atol=1e-15)


def test_knots_n1():
    assert np.array_equal(chebyshev_knots(1, 1.0).knots, [1.0, 0.0])


def test_knots_n4_closed_form():
    h = np.sqrt(2) / 2
    expected = [1.0, (h + 1) / 2, 0.5, (1 - h) / 2, 0.0]
    assert np.allclose(chebyshev_knots(4, 1.0).knots, expected, atol=1e-15)


@pytest.mark.parametrize("N,t_f", [(0, 1.0), (-3, 1.0), (4, 0.0), (4, -1.0)])
def test_knots_reject_bad_arguments(N, t_f):
    with pytest.raises(ValueError):
        chebyshev_knots(N, t_f)


@given(st.integers(1, 40), st.floats(1e-3, 1e3))
def test_knot_invariants(N, t_f):
    T = np.asarray(chebyshev_knots(N, t_f).knots)
    assert T[0] == t_f and T[-1] == 0.0
    assert np.all(np.diff(T) < 0)
    assert np.all(T + T[::-1] == t_f)


def test_grid_is_immutable():
    g = chebyshev_knots(4, 1.0)
    with pytest.raises((ValueError, TypeError)):
        np.asarray(g.knots)[0] = 3.0


# -- differentiation matrix -------------------------------------------------------
def test_diff_matrix_n1():
    D = np.asarray(diff_matrix(chebyshev_knots(1, 1.0)).entries)
    assert np.allclose(D, [[0.5, -0.5], [0.5, -0.5]], atol=1e-15)


@pytest.mark.parametrize("N", [1, 2, 5, 16, 64])
def test_diff_matrix_rows_sum_to_zero(N):
    D = np.asarray(diff_matrix(chebyshev_knots(N, 3.0)).entries)
    assert np.max(np.abs(D @ np.ones(N + 1))) < 1e-12


def test_diff_matrix_of_square():
    g = chebyshev_knots(3, 1.0)
    T = np.asarray(g.knots)
    D = np.asarray(diff_matrix(g).entries)
    assert np.allclose((2 / g.t_f) * D @ T**2, 2 * T, atol=1e-13)


def test_diff_matrix_does_not_depend_on_horizon():
    a = np.asarray(diff_matrix(chebyshev_knots(7, 1.0)).entries)
    b = np.asarray(diff_matrix(chebyshev_knots(7, 9.0)).entries)
    assert np.array_equal(a, b)


# -- quadrature -------------------------------------------------------------------
def test_weights_n2():
    w = np.asarray(clenshaw_curtis_weights(chebyshev_knots(2, 2.0)).weights)
    assert np.allclose(w, [1 / 3, 4 / 3, 1 / 3], atol=1e-15)


def test_weights_n1_trapezoid():
    w = np.asarray(clenshaw_curtis_weights(chebyshev_knots(1, 1.0)).weights)
    assert np.allclose(w, [0.5, 0.5], atol=1e-15)


@given(st.integers(1, 40), st.floats(1e-3, 1e3))
def test_weight_invariants(N, t_f):
    w = np.asarray(clenshaw_curtis_weights(chebyshev_knots(N, t_f)).weights)
    assert np.all(w > 0)
    assert abs(w.sum() - t_f) <= 1e-13 * t_f
    assert np.allclose(w, w[::-1], rtol=1e-14, atol=0)


@pytest.mark.parametrize("N", [1, 2, 3, 6])
def test_weights_integrate_lagrange_basis(N):
    # independent check: integrate each Lagrange basis polynomial exactly
    g = chebyshev_knots(N, 1.5)
    T = np.asarray(g.knots)
    w = np.asarray(clenshaw_curtis_weights(g).weights)
    for j in range(N + 1):
        e = np.zeros(N + 1)
        e[j] = 1.0
        c = P.polyfit(T, e, N)
        ci = P.polyint(c)
        exact = P.polyval(g.t_f, ci) - P.polyval(0.0, ci)
        assert abs(w[j] - exact) < 1e-12


# -- polynomial exactness ----------------------------------------------------------
@settings(max_examples=60, deadline=None)
@given(st.integers(1, 16), st.floats(0.1, 10.0), st.integers(0, 2**32 - 1))
def test_polynomial_exactness(N, t_f, seed):
    r = np.random.default_rng(seed)
    # coefficients in the scaled variable s = t / t_f keep the test well conditioned
    c = r.uniform(-1, 1, N + 1)
    g = chebyshev_knots(N, t_f)
    T = np.asarray(g.knots)
    s = T / t_f
    vals = P.polyval(s, c)
    deriv = P.polyval(s, P.polyder(c)) / t_f
    D = np.asarray(diff_matrix(g).entries)
    scale = np.abs(c).sum()
    assert np.max(np.abs((2 / t_f) * D @ vals - deriv)) <= 1e-10 * scale * max(1.0, N**2 / t_f)
    ci = P.polyint(c)
    integral = t_f * (P.polyval(1.0, ci) - P.polyval(0.0, ci))
    w = np.asarray(clenshaw_curtis_weights(g).weights)
    assert abs(w @ vals - integral) <= 1e-10 * scale * t_f


# -- interpolation ------------------------------------------------------------------
def test_interpolation_hits_knots_exactly(rng):
    g = chebyshev_knots(9, 2.5)
    v = rng.normal(size=(10, 3))
    for k, t in enumerate(np.asarray(g.knots)):
        assert np.array_equal(barycentric_eval(g, v, t), v[k])


def test_interpolation_constant():
    g = chebyshev_knots(6, 1.0)
    t = np.linspace(0, 1, 37)
    assert np.allclose(barycentric_eval(g, np.full(7, 4.2), t), 4.2, rtol=0, atol=1e-14)


def test_interpolation_of_cube():
    g = chebyshev_knots(3, 1.0)
    T = np.asarray(g.knots)
    assert abs(barycentric_eval(g, T**3, 0.3) - 0.027) < 1e-14


def test_interpolation_vector_values_componentwise(rng):
    g = chebyshev_knots(5, 1.0)
    v = rng.normal(size=(6, 2))
    t = np.array([0.1, 0.55])
    both = barycentric_eval(g, v, t)
    for j in range(2):
        assert np.allclose(both[:, j], barycentric_eval(g, v[:, j], t), rtol=0, atol=1e-15)


def test_interpolation_near_knot_does_not_warn():
    g = chebyshev_knots(8, 1.0)
    t = np.asarray(g.knots)[3] + 1e-16
    with np.errstate(all="raise"):
        L = interpolation_matrix(g, [t, 0.5])
    assert L[0, 3] == 1.0 and np.count_nonzero(L[0]) == 1
    assert abs(L[1].sum() - 1) < 1e-14


@pytest.mark.parametrize("t", [-1e-3, 1.0 + 1e-3, np.nan])
def test_interpolation_rejects_out_of_domain(t):
    with pytest.raises(ValueError):
        barycentric_eval(chebyshev_knots(4, 1.0), np.zeros(5), t)


def test_interpolation_rejects_wrong_length():
    with pytest.raises(ValueError):
        barycentric_eval(chebyshev_knots(4, 1.0), np.zeros(4), 0.5)


def test_spectral_convergence_exp():
    t = np.linspace(0, 1, 1000)
    errs = []
    for N in (4, 6, 8, 10, 12):
        g = chebyshev_knots(N, 1.0)
        approx = barycentric_eval(g, np.exp(np.asarray(g.knots)), t)
        errs.append(np.max(np.abs(approx - np.exp(t))))
    assert all(b < a for a, b in zip(errs, errs[1:]))
    assert errs[-1] < 1e-9
