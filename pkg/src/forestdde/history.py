"""Dense output: piecewise cubic Hermite storage of A_i(t) and tau_i(t).

Knots are appended by the integrator. For s <= 0 the abundances come from the
initial histories; for s > 0 from the Hermite segment containing s.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .model import (DelayNormalization, ModelConfig, history_breakpoints,
                    history_total)
from .numerics import GL_NODES, GL_WEIGHTS, PanelPrimitive, hermite, panel_breaks

HISTORY_PANELS = 512
_GL_NODES_LIST = [float(x) for x in GL_NODES]
_GL_WEIGHTS_LIST = [float(x) for x in GL_WEIGHTS]


class _Buffer:
    """Growable float array, rows appended one at a time."""

    def __init__(self, width, capacity=1024):
        self._data = np.empty((capacity, width))
        self.size = 0

    def append(self, row):
        if self.size == self._data.shape[0]:
            grown = np.empty((2 * self.size, self._data.shape[1]))
            grown[: self.size] = self._data[: self.size]
            self._data = grown
        self._data[self.size] = row
        self.size += 1

    def set_last(self, row):
        self._data[self.size - 1] = row

    @property
    def view(self):
        return self._data[: self.size]


@dataclass(frozen=True)
class DenseSegment:
    """One Hermite piece, for inspection; the trajectory stores knots directly."""

    t_lo: float
    t_hi: float
    A_lo: tuple
    A_hi: tuple
    dA_lo: tuple
    dA_hi: tuple
    tau_lo: tuple
    tau_hi: tuple
    dtau_lo: tuple
    dtau_hi: tuple

    def A(self, j, s):
        return hermite(self.t_lo, self.t_hi, self.A_lo[j], self.A_hi[j], self.dA_lo[j], self.dA_hi[j], s)

    def tau(self, j, s):
        return hermite(self.t_lo, self.t_hi, self.tau_lo[j], self.tau_hi[j],
                       self.dtau_lo[j], self.dtau_hi[j], s)


class DenseTrajectory:
    """Continuous extension of (A, tau) on [0, t_current] spliced onto the histories.

    Each knot k stores t_k, A(t_k), A'(t_k), tau(t_k), tau'(t_k). Between knots
    every channel is the cubic Hermite interpolant of its end values and slopes.
    """

    def __init__(self, config: ModelConfig, C: DelayNormalization):
        self.config = config
        self.C = C
        self.n = config.n
        self.t = []
        self.A = []
        self.dA = []
        self._buf = _Buffer(1 + 4 * self.n)
        self._phi = [sp.history.scalar() for sp in config.species]
        self._lookback = [config.lookback(j) for j in range(self.n)]
        self._min_s = -max(self._lookback) if self.n else 0.0
        self._cum = [np.zeros(1) for _ in range(self.n)]
        self._hist_prim = [self._build_history_primitive(i) for i in range(self.n)]
        self._f_scalar = [sp.f.scalar() for sp in config.species]
        self._rows = [[(j, z) for j, z in enumerate(config.zeta[i]) if z > 0] for i in range(self.n)]

    # -- construction -------------------------------------------------------
    def append(self, t, A, dA, tau, dtau):
        if self.t and t <= self.t[-1]:
            raise ValueError(f"knots must increase: {t} after {self.t[-1]}")
        self.t.append(float(t))
        self.A.append(list(A))
        self.dA.append(list(dA))
        self._buf.append(np.concatenate([[t], A, dA, tau, dtau]))

    def replace_last(self, A, dA, tau, dtau):
        """Overwrite the newest knot's data (used when the delay is re-anchored)."""
        t = self.t[-1]
        self.A[-1] = list(A)
        self.dA[-1] = list(dA)
        self._buf.set_last(np.concatenate([[t], A, dA, tau, dtau]))
        last_seg = len(self.t) - 2
        for i in range(self.n):
            if len(self._cum[i]) > last_seg + 1:
                self._cum[i] = self._cum[i][: last_seg + 1]

    # -- raw arrays ---------------------------------------------------------
    @property
    def times(self) -> np.ndarray:
        return self._buf.view[:, 0]

    @property
    def A_knots(self) -> np.ndarray:
        return self._buf.view[:, 1 : 1 + self.n]

    @property
    def dA_knots(self) -> np.ndarray:
        return self._buf.view[:, 1 + self.n : 1 + 2 * self.n]

    @property
    def tau_knots(self) -> np.ndarray:
        return self._buf.view[:, 1 + 2 * self.n : 1 + 3 * self.n]

    @property
    def dtau_knots(self) -> np.ndarray:
        return self._buf.view[:, 1 + 3 * self.n : 1 + 4 * self.n]

    @property
    def lag_knots(self) -> np.ndarray:
        return self.times[:, None] - self.tau_knots

    @property
    def t_current(self) -> float:
        return self.t[-1]

    @property
    def num_segments(self) -> int:
        return max(len(self.t) - 1, 0)

    def segment(self, k) -> DenseSegment:
        v = self._buf.view
        n = self.n
        lo, hi = v[k], v[k + 1]
        sl = lambda row, a: tuple(row[1 + a * n : 1 + (a + 1) * n])
        return DenseSegment(lo[0], hi[0], sl(lo, 0), sl(hi, 0), sl(lo, 1), sl(hi, 1),
                            sl(lo, 2), sl(hi, 2), sl(lo, 3), sl(hi, 3))

    # -- scalar lookups (integrator inner loop) -----------------------------
    def A_vector(self, s):
        """All A_j(s) as a list; s must lie in [-lookback, t_current]."""
        if s <= 0.0:
            if s < self._min_s - 1e-9 * max(1.0, -self._min_s):
                raise DomainError(f"history queried at {s}, before {self._min_s}")
            return [phi(s) for phi in self._phi]
        t = self.t
        k = bisect.bisect_right(t, s) - 1
        if k >= len(t) - 1:
            if s > t[-1]:
                raise DomainError(f"dense output queried at {s} beyond t_current={t[-1]}")
            k = len(t) - 2
        t0, t1 = t[k], t[k + 1]
        h = t1 - t0
        th = (s - t0) / h
        th2 = th * th
        th3 = th2 * th
        h00 = 2.0 * th3 - 3.0 * th2 + 1.0
        h10 = (th3 - 2.0 * th2 + th) * h
        h01 = -2.0 * th3 + 3.0 * th2
        h11 = (th3 - th2) * h
        y0, y1, d0, d1 = self.A[k], self.A[k + 1], self.dA[k], self.dA[k + 1]
        return [h00 * y0[j] + h10 * d0[j] + h01 * y1[j] + h11 * d1[j] for j in range(self.n)]

    # -- public point evaluations ------------------------------------------
    def eval_state(self, i, s):
        """A_i(s) for -tau_i0 <= s <= t_current (history for s <= 0)."""
        if s < -self._lookback[i] - 1e-12 * max(1.0, self._lookback[i]):
            raise DomainError(
                f"A_{i} queried at {s} < -{self._lookback[i]}: the lag went below its floor"
            )
        if s > self.t_current:
            raise DomainError(f"A_{i} queried at {s} beyond t_current={self.t_current}")
        if s <= 0.0:
            return float(self._phi[i](s))
        return self.A_vector(s)[i]

    def eval_delay(self, i, s):
        """tau_i(s) for 0 <= s <= t_current."""
        if s < 0.0 or s > self.t_current:
            raise DomainError(f"tau_{i} is defined on [0, {self.t_current}], got {s}")
        return float(self.tau_at(np.array([s]))[0, i])

    # -- vectorised evaluations ---------------------------------------------
    def _locate(self, s):
        T = self.times
        k = np.searchsorted(T, s, side="right") - 1
        return np.clip(k, 0, len(T) - 2)

    def _hermite_channel(self, s, vals, ders):
        T = self.times
        k = self._locate(s)
        s2 = s[..., None]
        return hermite(T[k][..., None], T[k + 1][..., None], vals[k], vals[k + 1], ders[k], ders[k + 1], s2)

    def A_at(self, s):
        """A(s) for an array of times; returns shape s.shape + (n,)."""
        s = np.asarray(s, dtype=float)
        out = np.empty(s.shape + (self.n,))
        neg = s <= 0.0
        if np.any(neg):
            if np.any(s[neg] < self._min_s - 1e-9 * max(1.0, -self._min_s)):
                raise DomainError(f"history queried before {self._min_s}")
            for j, sp in enumerate(self.config.species):
                out[..., j][neg] = sp.history(s[neg])
        pos = ~neg
        if np.any(pos):
            if np.any(s[pos] > self.t_current * (1 + 1e-14)):
                raise DomainError(f"dense output queried beyond t_current={self.t_current}")
            out[pos] = self._hermite_channel(s[pos], self.A_knots, self.dA_knots)
        return out

    def tau_at(self, s):
        s = np.asarray(s, dtype=float)
        if np.any(s < 0.0) or np.any(s > self.t_current * (1 + 1e-14)):
            raise DomainError(f"tau is defined on [0, {self.t_current}]")
        return self._hermite_channel(s, self.tau_knots, self.dtau_knots)

    def Z_at(self, i, s):
        return self.A_at(s) @ np.asarray(self.config.zeta[i])

    def f_of_Z(self, i, s):
        return self.config.species[i].f(self.Z_at(i, s))

    # -- running integral of f_i(Z_i) ---------------------------------------
    def _build_history_primitive(self, i):
        tau0 = self.config.species[i].tau0
        if tau0 == 0:
            return None
        Z = history_total(self.config, i)
        f = self.config.species[i].f
        edges = panel_breaks(-tau0, 0.0, HISTORY_PANELS, history_breakpoints(self.config, i, -tau0))
        return PanelPrimitive(lambda s: f(Z(s)), edges)

    def _extend_cumulative(self, i):
        K = self.num_segments
        done = len(self._cum[i]) - 1
        if done >= K:
            return
        T = self.times
        a = T[done:K]
        w = T[done + 1 : K + 1] - a
        nodes = a[:, None] + w[:, None] * GL_NODES
        vals = self.f_of_Z(i, nodes.ravel()).reshape(nodes.shape)
        seg = w * (vals @ GL_WEIGHTS)
        self._cum[i] = np.concatenate([self._cum[i], self._cum[i][-1] + np.cumsum(seg)])

    def primitive(self, i, s):
        """P_i(s) with P_i(t) - P_i(t - tau) = integral of f_i(Z_i) over [t - tau, t].

        For s >= 0 this is the integral from 0 to s; for s < 0 it is
        K_i(s) - C_i where K_i integrates the history part from -tau_i0.
        """
        s = np.asarray(s, dtype=float)
        out = np.empty(s.shape)
        neg = s < 0.0
        if np.any(neg):
            hp = self._hist_prim[i]
            if hp is None:
                raise DomainError(f"species {i} has tau0 = 0; no history integral")
            out[neg] = hp.value(s[neg]) - self.C[i]
        pos = ~neg
        if np.any(pos):
            self._extend_cumulative(i)
            sp_ = s[pos]
            k = self._locate(sp_)
            a = self.times[k]
            w = sp_ - a
            nodes = a[:, None] + w[:, None] * GL_NODES
            vals = self.f_of_Z(i, nodes.ravel()).reshape(nodes.shape)
            out[pos] = self._cum[i][k] + w * (vals @ GL_WEIGHTS)
        return out

    def primitive_scalar(self, i, s):
        """Scalar version of :meth:`primitive` without numpy overhead on the segment part."""
        if s < 0.0:
            return float(self.primitive(i, np.array([s]))[0])
        self._extend_cumulative(i)
        t = self.t
        k = bisect.bisect_right(t, s) - 1
        k = min(max(k, 0), len(t) - 2)
        a = t[k]
        w = s - a
        f = self._f_scalar[i]
        row = self._rows[i]
        acc = 0.0
        for x, wt in zip(_GL_NODES_LIST, _GL_WEIGHTS_LIST):
            A = self.A_vector(a + w * x)
            acc += wt * f(sum(z * A[j] for j, z in row))
        return float(self._cum[i][k]) + w * acc

    def delay_integral(self, i, lo, hi):
        """Integral of f_i(Z_i(sigma)) over [lo, hi] (arrays allowed)."""
        return self.primitive(i, hi) - self.primitive(i, lo)
