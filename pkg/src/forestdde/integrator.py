"""Fixed-step RK4 for the coupled (A_i, tau_i) system with state-dependent lags.

    A_i'   = -mu_Ai A_i + beta_i e^{-mu_Ji tau_i} r_i A_i(t - tau_i)
    tau_i' = 1 - r_i,   r_i = f_i(Z_i(t)) / f_i(Z_i(t - tau_i))

Delayed values come from the dense output. When a stage's lag falls inside the
step being taken (tau < h) the step is iterated to a fixed point; when that
fails the step is halved. The step is restarted exactly at each t_i*, where
the lag crosses zero and the delayed term switches from history to solution.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .delay import conservation_residual, tau_from_integral
from .errors import NumericalError, ValidationError
from .history import DenseTrajectory
from .model import ModelConfig, compute_normalization
from .numerics import bisect_scalar, hermite

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class IntegratorSettings:
    h: float = 0.01
    t_end: float = 100.0
    max_fixed_point_iters: int = 10
    fp_tol: float = 1e-12
    reanchor_every: int = 100  # 0 disables re-anchoring
    max_halvings: int = 10
    restart_at_tstar: bool = True
    # breaking points are followed this many generations: 1 stops steps at each t*,
    # 2 also at the times where a lag reaches an earlier t*, and so on
    breaking_depth: int = 2

    def __post_init__(self):
        if not (math.isfinite(self.h) and self.h > 0):
            raise ValidationError(f"step h must be > 0, got {self.h!r}")
        if not (math.isfinite(self.t_end) and self.t_end > 0):
            raise ValidationError(f"t_end must be > 0, got {self.t_end!r}")
        if self.reanchor_every < 0 or self.max_fixed_point_iters < 1:
            raise ValidationError("reanchor_every must be >= 0 and max_fixed_point_iters >= 1")
        if self.breaking_depth < 1:
            raise ValidationError("breaking_depth must be >= 1")


@dataclass
class BreakingPointLog:
    tstar: list
    restarts: list = field(default_factory=list)  # (species, time)
    points: list = field(default_factory=list)  # (time, generation) of every tracked point
    halvings: list = field(default_factory=list)  # times where a step was halved


@dataclass
class SolveResult:
    trajectory: DenseTrajectory
    breaks: BreakingPointLog
    residuals: np.ndarray  # conservation residual at every knot, shape (K, n)
    settings: IntegratorSettings
    runtime: float

    @property
    def max_residual(self):
        return np.abs(self.residuals).max(axis=0)


class _NoConvergence(Exception):
    pass


class _System:
    """Per-species constants unpacked to plain floats for the inner loop."""

    def __init__(self, config: ModelConfig):
        self.n = config.n
        self.mu_A = [sp.mu_A for sp in config.species]
        self.mu_J = [sp.mu_J for sp in config.species]
        self.beta = [sp.beta for sp in config.species]
        self.tau0 = [sp.tau0 for sp in config.species]
        self.f = [sp.f.scalar() for sp in config.species]
        self.rows = [
            [(j, config.zeta[i][j]) for j in range(self.n) if config.zeta[i][j] > 0]
            for i in range(self.n)
        ]
        self.degenerate = [sp.tau0 == 0 for sp in config.species]

    def rhs(self, t, y, lookup):
        """Derivative of the flat state y = [A_1..A_n, tau_1..tau_n]."""
        n = self.n
        out = [0.0] * (2 * n)
        for i in range(n):
            Ai = y[i]
            if self.degenerate[i]:
                out[i] = (self.beta[i] - self.mu_A[i]) * Ai
                continue
            tau = y[n + i]
            lag = t - tau
            if lag < -self.tau0[i] * (1.0 + 1e-9) - 1e-12:
                raise NumericalError(
                    f"species {i}: lag {lag:.6g} below its floor -{self.tau0[i]} at t={t:.6g}"
                )
            Alag = lookup(lag)
            Znow = 0.0
            Zlag = 0.0
            for j, z in self.rows[i]:
                Znow += z * y[j]
                Zlag += z * Alag[j]
            f = self.f[i]
            ratio = f(Znow) / f(Zlag)
            out[i] = -self.mu_A[i] * Ai + self.beta[i] * math.exp(-self.mu_J[i] * tau) * ratio * Alag[i]
            out[n + i] = 1.0 - ratio
        return out


class SDDEIntegrator:
    """Owns the dense trajectory of one solve and advances it step by step."""

    def __init__(self, config: ModelConfig, settings: IntegratorSettings, C=None):
        self.config = config
        self.settings = settings
        self.C = compute_normalization(config) if C is None else C
        self.sys = _System(config)
        self.traj = DenseTrajectory(config, self.C)
        self.breaks = BreakingPointLog(tstar=[0.0 if d else None for d in self.sys.degenerate])
        n = config.n
        A0 = [float(sp.history(0.0)) for sp in config.species]
        y0 = A0 + [sp.tau0 for sp in config.species]
        k0 = self.sys.rhs(0.0, y0, self.traj.A_vector)
        self._append(0.0, y0, k0)
        self.y = y0
        self.k = k0
        self.t = 0.0
        self._steps = 0
        # the junction with the history at t=0 is generation 0
        self.breaks.points.append((0.0, 0))
        # lags increase, so each (species, point index) pair is crossed once
        self._consumed = set()

    # -- helpers -------------------------------------------------------------
    def _append(self, t, y, k):
        n = self.sys.n
        self.traj.append(t, y[:n], k[:n], y[n:], k[n:])

    def _rk4(self, t, y, k1, h, lookup):
        f = self.sys.rhs
        m = len(y)
        hh = 0.5 * h
        y2 = [y[q] + hh * k1[q] for q in range(m)]
        k2 = f(t + hh, y2, lookup)
        y3 = [y[q] + hh * k2[q] for q in range(m)]
        k3 = f(t + hh, y3, lookup)
        y4 = [y[q] + h * k3[q] for q in range(m)]
        k4 = f(t + h, y4, lookup)
        h6 = h / 6.0
        y_new = [y[q] + h6 * (k1[q] + 2.0 * (k2[q] + k3[q]) + k4[q]) for q in range(m)]
        k_new = f(t + h, y_new, lookup)
        return y_new, k_new

    def _attempt(self, t, y, k1, h):
        """One RK4 step, iterated to a fixed point if a lag lands inside (t, t+h)."""
        traj = self.traj
        n = self.sys.n
        tn = traj.t_current
        overlap = [False]
        prov = [self._extrapolation(y, k1)]

        def lookup(s):
            if s <= tn:
                return traj.A_vector(s)
            overlap[0] = True
            return prov[0](s)

        y_new, k_new = self._rk4(t, y, k1, h, lookup)
        if overlap[0]:
            for _ in range(self.settings.max_fixed_point_iters):
                prov[0] = _segment_eval(t, t + h, y[:n], y_new[:n], k1[:n], k_new[:n])
                y2, k2 = self._rk4(t, y, k1, h, lookup)
                scale = max(1.0, max(abs(v) for v in y_new))
                diff = max(abs(a - b) for a, b in zip(y2, y_new))
                y_new, k_new = y2, k2
                if diff <= self.settings.fp_tol * scale:
                    break
            else:
                raise _NoConvergence
        for i in range(n):
            if not y_new[i] >= 0.0:
                raise NumericalError(
                    f"A_{i} became negative ({y_new[i]:.3e}) at t={t + h:.6g}; "
                    f"the model preserves positivity, so retry with a smaller h (try h/2)"
                )
        return y_new, k_new

    def _extrapolation(self, y, k1):
        traj = self.traj
        n = self.sys.n
        if len(traj.t) >= 2:
            t0, t1 = traj.t[-2], traj.t[-1]
            y0, y1, d0, d1 = traj.A[-2], traj.A[-1], traj.dA[-2], traj.dA[-1]
            return _segment_eval(t0, t1, y0, y1, d0, d1)
        t0 = traj.t[-1]
        A, dA = list(y[:n]), list(k1[:n])
        return lambda s: [A[j] + (s - t0) * dA[j] for j in range(n)]

    def _crossing_in_step(self, i, d, t, y, k, h, y_new, k_new):
        """Time in (t, t+h] where the lag of species i reaches d, on the step's Hermite interpolant."""
        n = self.sys.n
        g = lambda s: s - hermite(t, t + h, y[n + i], y_new[n + i], k[n + i], k_new[n + i], s) - d
        return bisect_scalar(g, t, t + h, xtol=1e-16)

    def _crossings(self, t, y, k, h, y_new, k_new):
        """Sorted (time, species, generation, source index) of lags crossing a tracked breaking point in the step."""
        n = self.sys.n
        depth = self.settings.breaking_depth
        out = []
        for i in range(n):
            if self.sys.degenerate[i]:
                continue
            lo = t - y[n + i]
            hi = t + h - y_new[n + i]
            for q, (d, gen) in enumerate(self.breaks.points):
                if gen < depth and (i, q) not in self._consumed and lo < d <= hi:
                    ts = self._crossing_in_step(i, d, t, y, k, h, y_new, k_new)
                    out.append((ts, i, gen + 1, q))
        out.sort()
        return out

    def _land_on_crossing(self, t, y, k, ts, cand):
        """Step to ts, then correct the step length by Newton so the integrated lag equals the point."""
        n = self.sys.n
        _, i, _, q = cand
        d = self.breaks.points[q][0]
        hs = ts - t
        y_new, k_new = self._attempt(t, y, k, hs)
        for _ in range(4):
            g = t + hs - y_new[n + i] - d
            if abs(g) <= 1e-15 * max(1.0, abs(t + hs)):
                break
            hs_next = hs - g / (1.0 - k_new[n + i])
            if not 0.0 < hs_next < 2.0 * hs:
                break
            hs = hs_next
            y_new, k_new = self._attempt(t, y, k, hs)
        return y_new, k_new, t + hs

    def _reanchor(self):
        n = self.sys.n
        y = list(self.y)
        changed = False
        for i in range(n):
            if self.sys.degenerate[i]:
                continue
            y[n + i] = tau_from_integral(self.traj, i, self.t)
            changed = True
        if not changed:
            return
        lookup = self.traj.A_vector
        k = self.sys.rhs(self.t, y, lookup)
        self.traj.replace_last(y[:n], k[:n], y[n:], k[n:])
        self.y, self.k = y, k

    # -- driver ----------------------------------------------------------------
    def step(self, h):
        """Advance by h (or less, to stop at a breaking point); returns the new time."""
        s = self.settings
        t, y, k = self.t, self.y, self.k
        n = self.sys.n
        h_min = s.h / 2 ** s.max_halvings
        while True:
            try:
                y_new, k_new = self._attempt(t, y, k, h)
                break
            except _NoConvergence:
                if h / 2 < h_min * (1 - 1e-12):
                    raise NumericalError(
                        f"fixed-point iteration for overlapping lags diverged at t={t:.6g} "
                        f"even with h={h:.3e}"
                    )
                h = h / 2
                self.breaks.halvings.append(t)
        t_new = t + h
        tiny = 1e-10 * s.h
        candidates = self._crossings(t, y, k, h, y_new, k_new)
        if candidates:
            ts = candidates[0][0]
            if s.restart_at_tstar and ts - t > tiny and t_new - ts > tiny:
                hit = [c for c in candidates if c[0] - ts <= tiny]
                y_new, k_new, ts = self._land_on_crossing(t, y, k, ts, candidates[0])
                t_new = ts
                self.breaks.restarts.extend((i, ts) for _, i, _, _ in hit)
                hit = [(ts, i, g, q) for _, i, g, q in hit]
            else:
                hit = candidates
            for tc, i, gen, q in hit:
                self._consumed.add((i, q))
                if gen == 1:
                    self.breaks.tstar[i] = tc
                if all(abs(tc - p) > tiny for p, _ in self.breaks.points):
                    self.breaks.points.append((tc, gen))
        self._append(t_new, y_new, k_new)
        self.t, self.y, self.k = t_new, y_new, k_new
        self._steps += 1
        if s.reanchor_every and self._steps % s.reanchor_every == 0:
            self._reanchor()
        return t_new

    def run(self):
        s = self.settings
        k_grid = 1
        while self.t < s.t_end * (1 - 1e-14):
            while k_grid * s.h <= self.t + 1e-9 * s.h:
                k_grid += 1
            target = min(k_grid * s.h, s.t_end)
            if target - self.t <= 1e-9 * s.h:
                target = min((k_grid + 1) * s.h, s.t_end)
            self.step(target - self.t)
        return self.traj


def rhs(config: ModelConfig, traj: DenseTrajectory, t, A, tau):
    """(A', tau') at time t for state (A, tau); delayed values from ``traj``."""
    sys_ = _System(config)
    d = sys_.rhs(t, list(A) + list(tau), traj.A_vector)
    n = config.n
    return d[:n], d[n:]


def solve(config: ModelConfig, settings: IntegratorSettings = IntegratorSettings(),
          residuals: bool = True) -> SolveResult:
    """Integrate on [0, t_end]; returns the dense trajectory, t_i* log and residuals."""
    start = time.perf_counter()
    integ = SDDEIntegrator(config, settings)
    integ.run()
    traj = integ.traj
    if residuals:
        res = np.column_stack([conservation_residual(traj, i) for i in range(config.n)])
    else:
        res = np.zeros((len(traj.t), config.n))
    runtime = time.perf_counter() - start
    log.debug("solve: %d knots in %.2fs", len(traj.t), runtime)
    return SolveResult(traj, integ.breaks, res, settings, runtime)


def _segment_eval(t0, t1, y0, y1, d0, d1):
    n = len(y0)
    y0, y1, d0, d1 = list(y0), list(y1), list(d0), list(d1)

    def ev(s):
        return [hermite(t0, t1, y0[j], y1[j], d0[j], d1[j], s) for j in range(n)]

    return ev
