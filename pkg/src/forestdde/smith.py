"""Single-species cross-check through the time change x = Phi(t) = integral_0^t f(Z(s)) ds.

Under this change of variable the state-dependent delay becomes the constant
delay delta = C, and W(x) = A(Phi^{-1}(x)) obeys

    W'(x) = -mu_A W / f(W) + beta exp(-mu_J I(x)) W(x - delta) / f(W(x - delta)),
    I(x)  = integral_{-delta}^{0} dr / f(W(x + r))   (= tau(t) at x = Phi(t)).

``solve_constant_delay`` integrates this by the method of steps, independently
of the SDDE integrator, so the two trajectories can be compared.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import UnsupportedError
from .history import DenseTrajectory
from .model import ModelConfig
from .numerics import GL_NODES, GL_WEIGHTS, PanelPrimitive, bisect_increasing, hermite


@dataclass
class TransformData:
    """delta, the time change Phi and its inverse, and W = A o Phi^{-1}."""

    delta: float
    traj: DenseTrajectory
    phi_knots: np.ndarray  # Phi at the trajectory knots
    dphi_knots: np.ndarray  # f(Z) at the knots

    def Phi(self, t):
        """Phi(t); for t < 0 the history-side map -integral_t^0 f(Z_phi)."""
        t = np.asarray(t, dtype=float)
        out = np.empty(t.shape)
        neg = t < 0
        if np.any(neg):
            out[neg] = self.traj.primitive(0, t[neg])
        pos = ~neg
        if np.any(pos):
            T = self.traj.times
            k = np.clip(np.searchsorted(T, t[pos], side="right") - 1, 0, len(T) - 2)
            out[pos] = hermite(T[k], T[k + 1], self.phi_knots[k], self.phi_knots[k + 1],
                               self.dphi_knots[k], self.dphi_knots[k + 1], t[pos])
        return out

    def Phi_inv(self, x):
        x = np.asarray(x, dtype=float)
        lo = np.where(x < 0, -self.traj.config.species[0].tau0, 0.0)
        hi = np.where(x < 0, 0.0, self.traj.t_current)
        return bisect_increasing(lambda t: self.Phi(t) - x, lo, hi, xtol=1e-15)

    def W(self, x):
        t = self.Phi_inv(x)
        return self.traj.A_at(t)[..., 0]

    @property
    def x_current(self):
        return float(self.phi_knots[-1])


def build_transform(traj: DenseTrajectory) -> TransformData:
    if traj.n != 1:
        raise UnsupportedError("the constant-delay transform exists only for a single species")
    T = traj.times
    phi = traj.primitive(0, T)
    dphi = traj.f_of_Z(0, T)
    return TransformData(float(traj.C[0]), traj, phi, dphi)


@dataclass
class ConstantDelaySolution:
    """Dense (W, clock) output of the constant-delay equation.

    ``clock`` is T(x) = integral_0^x dr / f(W(r)), the original time; it is
    carried as an extra ODE channel so that the exponent I(x) = T(x) - T(x - delta)
    never needs values from inside the current step.
    """

    delta: float
    zeta: float
    f: Callable
    x: list
    W: list
    dW: list
    T: list
    dT: list
    W_history: Callable
    T_history: Callable

    def _seg(self, x, vals, ders, hist):
        x = np.asarray(x, dtype=float)
        out = np.empty(x.shape)
        neg = x <= 0
        if np.any(neg):
            out[neg] = hist(x[neg])
        pos = ~neg
        if np.any(pos):
            X = np.asarray(self.x)
            V, D = np.asarray(vals), np.asarray(ders)
            k = np.clip(np.searchsorted(X, x[pos], side="right") - 1, 0, len(X) - 2)
            out[pos] = hermite(X[k], X[k + 1], V[k], V[k + 1], D[k], D[k + 1], x[pos])
        return out

    def W_at(self, x):
        return self._seg(x, self.W, self.dW, self.W_history)

    def clock_at(self, x):
        return self._seg(x, self.T, self.dT, self.T_history)

    def recovered_delay(self, x):
        """integral_{-delta}^{0} dr / f(W(x + r)) by Gauss-Legendre on every Hermite piece."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return self._reciprocal_primitive(x) - self._reciprocal_primitive(x - self.delta)

    def _reciprocal_primitive(self, x):
        if not hasattr(self, "_rcum"):
            X = np.asarray(self.x)
            a, w = X[:-1], np.diff(X)
            nodes = a[:, None] + w[:, None] * GL_NODES
            vals = 1.0 / self.f(self.zeta * self.W_at(nodes.ravel())).reshape(nodes.shape)
            self._rcum = np.concatenate([[0.0], np.cumsum(w * (vals @ GL_WEIGHTS))])
            hist = lambda r: 1.0 / self.f(self.zeta * self.W_history(r))
            self._rhist = PanelPrimitive(hist, np.linspace(-self.delta, 0.0, 513))
        out = np.empty(x.shape)
        neg = x < 0
        if np.any(neg):
            out[neg] = self._rhist.value(x[neg]) - self._rhist.total
        pos = ~neg
        if np.any(pos):
            X = np.asarray(self.x)
            k = np.clip(np.searchsorted(X, x[pos], side="right") - 1, 0, len(X) - 2)
            a = X[k]
            w = x[pos] - a
            nodes = a[:, None] + w[:, None] * GL_NODES
            vals = 1.0 / self.f(self.zeta * self.W_at(nodes.ravel())).reshape(nodes.shape)
            out[pos] = self._rcum[k] + w * (vals @ GL_WEIGHTS)
        return out


def history_in_x(config: ModelConfig):
    """Transformed initial data on [-delta, 0]: W(x) = phi(s), T(x) = s where x = Phi_phi(s)."""
    sp = config.species[0]
    z = config.zeta[0][0]
    f = sp.f
    h = sp.history
    prim = PanelPrimitive(lambda s: f(z * h(s)), np.linspace(-sp.tau0, 0.0, 513))
    delta = prim.total

    def s_of_x(x):
        x = np.asarray(x, dtype=float)
        return bisect_increasing(lambda s: prim.value(s) - delta - x,
                                 np.full(x.shape, -sp.tau0), np.zeros(x.shape), xtol=1e-15)

    W_hist = lambda x: h(s_of_x(x))
    return delta, W_hist, s_of_x


def solve_constant_delay(config: ModelConfig, delta: float, W_history: Callable, x_end: float,
                         steps_per_delay: int = 200, T_history: Callable = None) -> ConstantDelaySolution:
    """Method of steps with RK4 on [0, x_end]; each delay interval gets ``steps_per_delay`` steps."""
    if config.n != 1:
        raise UnsupportedError("the constant-delay equation is single-species")
    if not delta > 0:
        raise UnsupportedError("delta = 0: the time change degenerates")
    sp = config.species[0]
    z = config.zeta[0][0]
    f_vec = sp.f
    f = sp.f.scalar()
    mu_A, mu_J, beta = sp.mu_A, sp.mu_J, sp.beta
    if T_history is None:
        rp = PanelPrimitive(lambda r: 1.0 / f_vec(z * W_history(r)), np.linspace(-delta, 0.0, 513))
        T_history = lambda x: rp.value(x) - rp.total

    def Wh(x):
        return float(np.asarray(W_history(np.array([x])))[0])

    def Th(x):
        return float(np.asarray(T_history(np.array([x])))[0])

    xs, Ws, dWs, Ts, dTs = [], [], [], [], []

    def delayed(x):
        if x <= 0.0:
            return Wh(x), Th(x)
        k = bisect.bisect_right(xs, x) - 1
        k = min(k, len(xs) - 2)
        x0, x1 = xs[k], xs[k + 1]
        return (hermite(x0, x1, Ws[k], Ws[k + 1], dWs[k], dWs[k + 1], x),
                hermite(x0, x1, Ts[k], Ts[k + 1], dTs[k], dTs[k + 1], x))

    def rhs(x, W, T):
        Wd, Td = delayed(x - delta)
        fW = f(z * W)
        dW = -mu_A * W / fW + beta * math.exp(-mu_J * (T - Td)) * Wd / f(z * Wd)
        return dW, 1.0 / fW

    h = delta / steps_per_delay
    W, T = Wh(0.0), 0.0
    dW, dT = rhs(0.0, W, T)
    xs.append(0.0); Ws.append(W); dWs.append(dW); Ts.append(T); dTs.append(dT)
    k = 0
    while xs[-1] < x_end * (1 - 1e-14):
        k += 1
        x0, x1 = xs[-1], k * h
        hh = x1 - x0
        a1, b1 = dW, dT
        a2, b2 = rhs(x0 + hh / 2, W + hh / 2 * a1, T + hh / 2 * b1)
        a3, b3 = rhs(x0 + hh / 2, W + hh / 2 * a2, T + hh / 2 * b2)
        a4, b4 = rhs(x1, W + hh * a3, T + hh * b3)
        W = W + hh / 6 * (a1 + 2 * a2 + 2 * a3 + a4)
        T = T + hh / 6 * (b1 + 2 * b2 + 2 * b3 + b4)
        dW, dT = rhs(x1, W, T)
        xs.append(x1); Ws.append(W); dWs.append(dW); Ts.append(T); dTs.append(dT)
    return ConstantDelaySolution(delta, z, f_vec, xs, Ws, dWs, Ts, dTs, W_history, T_history)


def smith_from_config(config: ModelConfig, x_end: float, steps_per_delay: int = 200):
    """Build the transformed history from the config and solve the constant-delay equation."""
    delta, W_hist, s_of_x = history_in_x(config)
    return solve_constant_delay(config, delta, W_hist, x_end, steps_per_delay, T_history=s_of_x)
