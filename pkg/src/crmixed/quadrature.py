"""Gauss quadrature on the reference triangle and the reference edge.

Triangle rules live on the reference triangle (0,0)-(1,0)-(0,1) and are
stored in barycentric coordinates; edge rules live on [0, 1].  Rules are
built once per degree and cached, and are exact for all polynomials up to
the requested total degree.
"""

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

MAX_TRI_DEGREE = 10
MAX_EDGE_DEGREE = 15


def _cross2(a, b):
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


class QuadRule:
    """Immutable quadrature rule.

    Attributes
    ----------
    points : ndarray
        Barycentric coordinates, shape (n, 3), for triangle rules;
        1-D coordinates in [0, 1], shape (n,), for edge rules.
    weights : ndarray
        Positive weights summing to the reference measure
        (1/2 for the triangle, 1 for the edge).
    degree : int
        Total polynomial degree integrated exactly.
    """

    def __init__(self, points, weights, degree):
        self.points = np.asarray(points, dtype=float)
        self.weights = np.asarray(weights, dtype=float)
        self.degree = int(degree)
        self.points.setflags(write=False)
        self.weights.setflags(write=False)

    def __len__(self):
        return len(self.weights)


_tri_cache = {}
_edge_cache = {}


def edge_rule(degree):
    """Gauss-Legendre rule on [0, 1] exact for polynomials up to `degree`."""
    if not 1 <= degree <= MAX_EDGE_DEGREE:
        raise ValueError(f"unsupported edge quadrature degree {degree}")
    if degree not in _edge_cache:
        n = (degree + 2) // 2
        x, w = roots_legendre(n)
        _edge_cache[degree] = QuadRule((x + 1.0) / 2.0, w / 2.0, degree)
    return _edge_cache[degree]


def tri_rule(degree):
    """Rule on the reference triangle exact for total degree `degree`.

    Built from a Duffy (collapsed square) map: Gauss-Legendre in the first
    coordinate times Gauss-Jacobi with weight (1-t) in the second, so the
    mapping Jacobian is absorbed by the Jacobi weight and all weights stay
    positive.
    """
    if not 1 <= degree <= MAX_TRI_DEGREE:
        raise ValueError(f"unsupported triangle quadrature degree {degree}")
    if degree not in _tri_cache:
        n = (degree + 2) // 2
        s, ws = roots_legendre(n)
        s = (s + 1.0) / 2.0
        ws = ws / 2.0
        tj, wj = roots_jacobi(n, 1.0, 0.0)
        t = (tj + 1.0) / 2.0
        wt = wj / 4.0
        # x = s(1-t), y = t on the reference triangle
        x = np.outer(s, 1.0 - t).ravel()
        y = np.tile(t, n)
        w = np.outer(ws, wt).ravel()
        bary = np.column_stack([1.0 - x - y, x, y])
        _tri_cache[degree] = QuadRule(bary, w, degree)
    return _tri_cache[degree]


def map_tri_to_physical(rule, v0, v1, v2):
    """Map a triangle rule to a physical triangle.

    Vertices may be single points (shape (2,)) or stacks (shape (m, 2)); in
    the stacked case the result has shape (m, n, 2) / (m, n).  Weights are
    scaled so they sum to the physical triangle area.
    """
    v0 = np.asarray(v0, dtype=float)
    v1 = np.asarray(v1, dtype=float)
    v2 = np.asarray(v2, dtype=float)
    lam = rule.points
    if v0.ndim == 1:
        pts = lam @ np.array([v0, v1, v2])
        area = 0.5 * abs(_cross2(v1 - v0, v2 - v0))
        return pts, rule.weights * (area / 0.5)
    pts = (lam[None, :, 0, None] * v0[:, None, :]
           + lam[None, :, 1, None] * v1[:, None, :]
           + lam[None, :, 2, None] * v2[:, None, :])
    area = 0.5 * np.abs(_cross2(v1 - v0, v2 - v0))
    return pts, rule.weights[None, :] * (area[:, None] / 0.5)


def map_edge_to_physical(rule, a, b):
    """Map an edge rule to physical segments; weights sum to the length."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    s = rule.points
    if a.ndim == 1:
        pts = a[None, :] + np.outer(s, b - a)
        return pts, rule.weights * np.linalg.norm(b - a)
    pts = a[:, None, :] + s[None, :, None] * (b - a)[:, None, :]
    length = np.linalg.norm(b - a, axis=1)
    return pts, rule.weights[None, :] * length[:, None]


def tri_monomial_integral(m, n):
    """Exact integral of x^m y^n over the reference triangle."""
    from math import factorial

    return factorial(m) * factorial(n) / factorial(m + n + 2)
