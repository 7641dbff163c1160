"""How fast Chebyshev interpolation and quadrature converge for exp(t) on [0, 1].

Prints the worst interpolation error on a fine grid, the derivative error at
the knots and the quadrature error for increasing knot counts.
"""

import numpy as np

from pstraj.specbasis import barycentric_eval, chebyshev_knots, clenshaw_curtis_weights, diff_matrix

t = np.linspace(0.0, 1.0, 2001)
exact_integral = np.e - 1.0

print(" N   interpolation   derivative   integral")
for N in range(2, 17, 2):
    g = chebyshev_knots(N, 1.0)
    T = np.asarray(g.knots)
    v = np.exp(T)
    interp = np.max(np.abs(barycentric_eval(g, v, t) - np.exp(t)))
    deriv = np.max(np.abs(2.0 * np.asarray(diff_matrix(g).entries) @ v - v))
    quad = abs(np.asarray(clenshaw_curtis_weights(g).weights) @ v - exact_integral)
    print(f"{N:2d}   {interp:12.3e}   {deriv:10.3e}   {quad:8.1e}")
