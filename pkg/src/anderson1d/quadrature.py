"""Globally adaptive Gauss-Kronrod (7/15) quadrature on finite intervals."""
from __future__ import annotations

import heapq

import numpy as np

from .errors import AccuracyError

_XGK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0])
_WGK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327])

# 15 abscissae on [-1, 1] and the matching weights
_X = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_WK = np.concatenate([_WGK[:-1], _WGK[::-1]])
_WG15 = np.zeros(15)
_WG15[[1, 3, 5, 7, 9, 11, 13]] = np.concatenate([_WG[:-1], _WG[::-1]])


def gk15(f, a, b):
    """Kronrod estimates and ``|K15 - G7|`` on each panel ``[a_i, b_i]``; ``f`` is vectorized.

    ``f`` may return several integrands stacked on the first axis.
    """
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    c = 0.5 * (a + b)
    r = 0.5 * (b - a)
    x = c[:, None] + r[:, None] * _X[None, :]
    fx = np.asarray(f(x))
    k = (fx @ _WK) * r
    g = (fx @ _WG15) * r
    return k, np.abs(k - g)


def integrate(f, breakpoints, rel_tol: float = 1e-12, abs_tol: float = 1e-300,
              max_panels: int = 4000, weights=None):
    """Adaptive integral of ``f`` over ``[breakpoints[0], breakpoints[-1]]``.

    ``f`` maps an array of abscissae to an array of the same shape, or to a
    stack of ``m`` such arrays, in which case every component is integrated
    and the largest weighted relative error drives the refinement.
    Returns ``(value, error_estimate)``.
    """
    bp = np.asarray(breakpoints, dtype=float)
    k, e = gk15(f, bp[:-1], bp[1:])
    multi = k.ndim == 2
    if not multi:
        k = k[None]
        e = e[None]
    m = k.shape[0]
    w = np.ones(m) if weights is None else np.asarray(weights, dtype=float)

    def score(err_col, tot):
        return float(np.max(w * err_col / np.maximum(np.abs(tot), abs_tol)))

    total = k.sum(axis=1)
    err = e.sum(axis=1)
    heap = []
    for i in range(bp.size - 1):
        heap.append((-score(e[:, i], total), bp[i], bp[i + 1], tuple(k[:, i]), tuple(e[:, i])))
    heapq.heapify(heap)
    panels = len(heap)
    while np.any(err > np.maximum(abs_tol, rel_tol * np.abs(total))):
        if panels >= max_panels:
            raise AccuracyError(
                f"quadrature budget of {max_panels} panels exhausted, error estimate {err.max():.3g}",
                error=err.tolist(), value=total.tolist())
        _, a, b, kp, ep = heapq.heappop(heap)
        mid = 0.5 * (a + b)
        k2, e2 = gk15(f, [a, mid], [mid, b])
        if not multi:
            k2 = k2[None]
            e2 = e2[None]
        total += k2.sum(axis=1) - np.asarray(kp)
        err += e2.sum(axis=1) - np.asarray(ep)
        for j, (lo, hi) in enumerate(((a, mid), (mid, b))):
            heapq.heappush(heap, (-score(e2[:, j], total), lo, hi, tuple(k2[:, j]), tuple(e2[:, j])))
        panels += 1
    # re-sum from the panels to remove accumulated cancellation in the running totals
    ks = np.array([p[3] for p in heap]).T
    es = np.array([p[4] for p in heap]).T
    total = ks.sum(axis=1)
    err = es.sum(axis=1)
    if multi:
        return total, err
    return float(total[0]), float(err[0])
