"""Gauss-Legendre rules on intervals, graded intervals and ordered simplices."""

from __future__ import annotations

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=64)
def gauss_legendre(m: int):
    """``m``-point Gauss-Legendre nodes and weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(m)
    return 0.5 * (x + 1.0), 0.5 * w


def graded_rule(m: int, grading: float = 1.0, toward: int = 0):
    """Gauss-Legendre on [0, 1] after the substitution ``x = u**grading``.

    Nodes cluster at ``toward`` (0 or 1), which tames integrable endpoint
    singularities of algebraic type.
    """
    u, w = gauss_legendre(m)
    if grading == 1.0:
        x, wx = u, w
    else:
        x = u**grading
        wx = w * grading * u ** (grading - 1.0)
    if toward == 1:
        x = 1.0 - x
    return x, wx


def simplex_rule(n: int, m: int, s: float, t: float, grading: float = 1.0):
    """Tensor rule on ``{s < x_1 < ... < x_n < t}``.

    Built from ordered coordinates ``x_n = s + (t - s) v_n`` and
    ``x_k = s + (x_{k+1} - s) v_k``, each ``v`` graded toward 0 (i.e. toward
    ``s``).  Returns ``(points, weights)`` with ``points`` of shape ``(m**n, n)``.
    """
    v, wv = graded_rule(m, grading, 0)
    grids = np.meshgrid(*([v] * n), indexing="ij")
    wgrids = np.meshgrid(*([wv] * n), indexing="ij")
    vs = [g.ravel() for g in grids]
    weights = np.prod([g.ravel() for g in wgrids], axis=0)
    pts = np.empty((m**n, n))
    span = np.full(m**n, t - s, dtype=float)
    for k in range(n - 1, -1, -1):
        weights = weights * span
        pts[:, k] = s + span * vs[k]
        span = pts[:, k] - s
    return pts, weights
