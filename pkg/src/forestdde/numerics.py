"""Small numerical building blocks: bisection, Hermite cubics, Gauss-Legendre panels."""

from __future__ import annotations

import numpy as np

# 5-point Gauss-Legendre rule on [0, 1]
_GL_X, _GL_W = np.polynomial.legendre.leggauss(5)
GL_NODES = 0.5 * (_GL_X + 1.0)
GL_WEIGHTS = 0.5 * _GL_W


def bisect_increasing(g, lo, hi, xtol=1e-14, maxiter=200):
    """Vectorised bisection for the root of an increasing function.

    ``g`` is called with an array of abscissae and must return an array of the
    same shape. Requires ``g(lo) <= 0 <= g(hi)`` elementwise; the bracket is
    shrunk until it is narrower than ``xtol`` (relative to ``max(1, |x|)``) or
    stops shrinking in floating point.
    """
    lo = np.array(lo, dtype=float, copy=True)
    hi = np.array(hi, dtype=float, copy=True)
    lo, hi = np.broadcast_arrays(lo, hi)
    lo = lo.copy()
    hi = hi.copy()
    for _ in range(maxiter):
        mid = 0.5 * (lo + hi)
        width = hi - lo
        if np.all(width <= xtol * np.maximum(1.0, np.abs(mid))):
            break
        stuck = (mid <= lo) | (mid >= hi)
        if np.all(stuck):
            break
        neg = g(mid) < 0.0
        lo = np.where(neg & ~stuck, mid, lo)
        hi = np.where(~neg & ~stuck, mid, hi)
    return 0.5 * (lo + hi)


def bisect_scalar(g, lo, hi, xtol=1e-14, maxiter=200):
    """Scalar bisection for an increasing ``g`` with ``g(lo) <= 0 <= g(hi)``."""
    glo = g(lo)
    if glo == 0.0:
        return lo
    for _ in range(maxiter):
        mid = 0.5 * (lo + hi)
        if hi - lo <= xtol * max(1.0, abs(mid)) or mid <= lo or mid >= hi:
            break
        if g(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def hermite(t0, t1, y0, y1, d0, d1, s):
    """Cubic Hermite interpolant through (t0, y0, d0) and (t1, y1, d1), evaluated at s.

    Works elementwise on numpy arrays as well as plain floats. Reproduces y0 and
    y1 exactly at the end points.
    """
    h = t1 - t0
    th = (s - t0) / h
    th2 = th * th
    th3 = th2 * th
    h00 = 2.0 * th3 - 3.0 * th2 + 1.0
    h10 = th3 - 2.0 * th2 + th
    h01 = -2.0 * th3 + 3.0 * th2
    h11 = th3 - th2
    return h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1


def hermite_derivative(t0, t1, y0, y1, d0, d1, s):
    h = t1 - t0
    th = (s - t0) / h
    th2 = th * th
    return (
        (6.0 * th2 - 6.0 * th) * (y0 - y1) / h
        + (3.0 * th2 - 4.0 * th + 1.0) * d0
        + (3.0 * th2 - 2.0 * th) * d1
    )


def panel_breaks(lo, hi, n_panels, extra=()):
    """Uniform panel edges on [lo, hi] merged with any extra breakpoints inside."""
    edges = np.linspace(lo, hi, n_panels + 1)
    extra = np.asarray([e for e in extra if lo < e < hi], dtype=float)
    if extra.size:
        edges = np.union1d(edges, extra)
    return edges


class PanelPrimitive:
    """Running integral of a vectorised integrand over fixed panels.

    ``value(s)`` returns the integral from ``edges[0]`` to ``s`` using one
    5-point Gauss-Legendre rule per panel plus one for the partial panel.
    """

    def __init__(self, integrand, edges):
        self.integrand = integrand
        self.edges = np.asarray(edges, dtype=float)
        a = self.edges[:-1]
        w = np.diff(self.edges)
        nodes = a[:, None] + w[:, None] * GL_NODES[None, :]
        vals = integrand(nodes.ravel()).reshape(nodes.shape)
        panel = w * (vals @ GL_WEIGHTS)
        self.cumulative = np.concatenate([[0.0], np.cumsum(panel)])

    @property
    def total(self):
        return float(self.cumulative[-1])

    def value(self, s):
        s = np.asarray(s, dtype=float)
        k = np.clip(np.searchsorted(self.edges, s, side="right") - 1, 0, len(self.edges) - 2)
        a = self.edges[k]
        w = s - a
        nodes = a[..., None] + w[..., None] * GL_NODES
        vals = self.integrand(nodes.ravel()).reshape(nodes.shape)
        return self.cumulative[k] + w * (vals @ GL_WEIGHTS)
