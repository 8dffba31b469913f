"""Independent reference computations shared by the tests (numpy only)."""
import numpy as np


def gauss(n):
    """Gauss-Legendre points and weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1), 0.5 * w


def triangle_rule(n):
    """Collapsed tensor rule on the reference triangle, exact to degree 2n-2."""
    t, w = gauss(n)
    X, Y = np.meshgrid(t, t, indexing="ij")
    W = np.outer(w, w)
    x = X
    y = Y * (1 - X)
    return np.stack([x.ravel(), y.ravel()], axis=1), (W * (1 - X)).ravel()


def lagrange_1d(nodes, t):
    """Values (len(t), len(nodes)) of the 1D Lagrange polynomials on ``nodes``."""
    nodes = np.asarray(nodes, float)
    out = np.ones((len(t), len(nodes)))
    for i, xi in enumerate(nodes):
        for j, xj in enumerate(nodes):
            if i != j:
                out[:, i] *= (t - xj) / (xi - xj)
    return out
