"""Hand-expanded drifts of the two case studies, transcribed term by term.

Used as oracles independent of the expression algebra.
"""

import numpy as np


def matrix_2d(x, g1, g2, alpha2, e1, e2, k, c=None):
    """State matrix A(x) of the 2-state constant-coupling family, f = A(x) x.

    ``c`` is the coefficient printed in entry (2,2); it defaults to ``k``.
    """
    c = k if c is None else c
    g11, g12 = g1
    g21, g22 = g2
    r = 1.0 + x[0] ** 2 + x[1] ** 2
    return np.array([
        [-0.75 * g11 ** 2 - alpha2 * g21 ** 2 - k / r - e1,
         -0.75 * g11 * g12 - alpha2 * g21 * g22 - 1.0],
        [-0.75 * g12 * g11 - alpha2 * g22 * g21 + 1.0,
         -0.75 * g12 ** 2 - alpha2 * g22 ** 2 - e2 - c / r],
    ])


def f_2d(x):
    x = np.asarray(x, dtype=float)
    k = 10.0 ** 2 / 3.0 * (1.0 + 1.0 / 0.5)
    return matrix_2d(x, (1.0, 5.0), (-1.0, 0.0), 20.0, 10.0, 20.0, k) @ x


def f_3d(x):
    x1, x2, x3 = map(float, x)
    r = 1.0 + x1 ** 2 + x2 ** 2 + x3 ** 2
    f1 = (-0.75 * x1 * x2 ** 4 + 0.75 * x1 * x2 ** 4 + 0.75 * x2 ** 2 * x3 ** 2 - 10 * x1 * x3 ** 2
          - 10 * x2 * x3 + 10 * x2 * x3 ** 2 - 25 * x1 / r - 10 * x1 - x2)
    f2 = (0.75 * x1 ** 2 * x2 ** 3 - 0.75 * x1 ** 2 * x2 ** 3 - 0.75 * x1 * x2 * x3 ** 2 - 10 * x1 * x3
          + 10 * x2 * x3 - 25 * x2 / r - 15 * x2 + x1)
    f3 = (0.75 * x1 * x2 ** 2 * x3 - 0.75 * x1 * x2 ** 2 * x3 - 0.75 * x3 ** 3 + 10 * x1 * x2 * x3
          + 10 * x2 ** 2 - 10 * x2 ** 2 * x3 - 25 * x3 / r - 5 * x3)
    return np.array([f1, f2, f3])
