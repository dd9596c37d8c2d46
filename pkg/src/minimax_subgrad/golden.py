"""Vectorized golden-section search for unimodal maximization."""

import math

import numpy as np

INV_PHI = (math.sqrt(5) - 1) / 2


def golden_max(fun, lo, hi, tol=1e-13, max_iter=200):
    """Maximize a unimodal ``fun`` independently on each bracket [lo[i], hi[i]].

    ``fun`` must accept an array of abscissae shaped like ``lo`` and return
    values of the same shape. Returns the arrays (argmax, max). Endpoints are
    never evaluated; callers that care about boundary maxima compare against
    them separately.
    """
    a = np.array(lo, dtype=float, copy=True)
    b = np.array(hi, dtype=float, copy=True)
    width = float(np.max(b - a)) if a.size else 0.0
    if width <= tol:
        x = 0.5 * (a + b)
        return x, fun(x)
    n_iter = min(max_iter, int(math.ceil(math.log(tol / width) / math.log(INV_PHI))))

    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc = fun(c)
    fd = fun(d)
    for _ in range(n_iter):
        keep_left = fc >= fd
        # left: [a, d] with new c; right: [c, b] with new d
        b = np.where(keep_left, d, b)
        a = np.where(keep_left, a, c)
        new_d = np.where(keep_left, c, a + INV_PHI * (b - a))
        new_c = np.where(keep_left, b - INV_PHI * (b - a), d)
        probe = np.where(keep_left, new_c, new_d)
        fp = fun(probe)
        fd, fc = np.where(keep_left, fc, fp), np.where(keep_left, fp, fd)
        c, d = new_c, new_d
    best_left = fc >= fd
    return np.where(best_left, c, d), np.where(best_left, fc, fd)
