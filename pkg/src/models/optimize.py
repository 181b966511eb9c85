"""
Readout Throughput - Scalar Search
Coarse scans and golden-section refinement used by the s and tau optimizers
"""

import math

import numpy as np

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
INV_PHI_SQ = (3.0 - math.sqrt(5.0)) / 2.0


def golden_section_minimize(objective, a, b, tol):
    """Minimize a unimodal objective on [a, b] until the bracket is narrower than tol

    Returns the best abscissa seen and its objective value.
    """
    dist = b - a
    if dist <= tol:
        mid = 0.5 * (a + b)
        return mid, objective(mid)

    n_iter = int(math.ceil(math.log(tol / dist) / math.log(INV_PHI)))

    c = a + INV_PHI_SQ * dist
    d = a + INV_PHI * dist
    yc = objective(c)
    yd = objective(d)

    for _ in range(n_iter - 1):
        if yc < yd:
            b, d, yd = d, c, yc
            dist = INV_PHI * dist
            c = a + INV_PHI_SQ * dist
            yc = objective(c)
        else:
            a, c, yc = c, d, yd
            dist = INV_PHI * dist
            d = a + INV_PHI * dist
            yd = objective(d)

    if yc < yd:
        return c, yc
    return d, yd


def bracket(grid, index):
    """Neighbouring grid points around index, clipped at the ends"""
    lo = grid[max(index - 1, 0)]
    hi = grid[min(index + 1, len(grid) - 1)]
    return lo, hi


def local_minima(values):
    """Indices of local minima of a sampled curve, endpoints included

    NaN entries never qualify and do not block their neighbours. A flat run
    contributes its first index only.
    """
    values = np.asarray(values, dtype=float)
    finite = np.where(np.isnan(values), np.inf, values)
    n = finite.size
    minima = []
    for i in range(n):
        if not np.isfinite(finite[i]):
            continue
        left = finite[i - 1] if i > 0 else np.inf
        right = finite[i + 1] if i < n - 1 else np.inf
        if finite[i] < left and finite[i] <= right:
            minima.append(i)
    return minima
