"""The state-dependent delay in its two equivalent forms.

Differential form (used while integrating):
    tau_i'(t) = 1 - f_i(Z_i(t)) / f_i(Z_i(t - tau_i(t))),  tau_i(0) = tau_i0.
Integral form (used as an oracle):
    integral of f_i(Z_i(s)) over [t - tau_i(t), t] = C_i.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DomainError, ValidationError
from .history import DenseTrajectory
from .numerics import bisect_increasing, bisect_scalar, hermite

TAU_HAT_RESIDUAL = 1e-11


@dataclass(frozen=True)
class DelayState:
    """Delays, lags t - tau_i(t) and normalisation constants at one time."""

    t: float
    tau: tuple
    C: tuple

    @property
    def lag(self):
        return tuple(self.t - x for x in self.tau)

    @classmethod
    def at(cls, traj: DenseTrajectory, t: float) -> "DelayState":
        tau = traj.tau_at(np.array([t]))[0]
        return cls(t, tuple(float(x) for x in tau), tuple(traj.C.C))


def tau_rhs(f_now: float, f_lag: float) -> float:
    """tau' = 1 - f_now / f_lag; strictly below 1 for positive inputs."""
    if not (f_now > 0 and f_lag > 0):
        raise ValidationError(f"growth rates must be positive, got f_now={f_now}, f_lag={f_lag}")
    return 1.0 - f_now / f_lag


def tau_from_integral(traj: DenseTrajectory, i: int, t, C_i: Optional[float] = None):
    """Solve integral_{t - x}^{t} f_i(Z_i) = C_i for x by bisection on [0, t + tau_i0].

    ``t`` may be a scalar or an array; every entry is solved simultaneously.
    """
    C = traj.C[i] if C_i is None else C_i
    tau0 = traj.config.species[i].tau0
    if C <= 0:
        if tau0 == 0:
            return np.zeros_like(np.asarray(t, dtype=float)) if np.ndim(t) else 0.0
        raise ValidationError(f"C_{i} must be positive, got {C}")
    if np.ndim(t) == 0:
        return _tau_from_integral_scalar(traj, i, float(t), C, tau0)
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t_arr < 0) or np.any(t_arr > traj.t_current):
        raise DomainError(f"t must lie in [0, {traj.t_current}]")
    P_t = traj.primitive(i, t_arr)
    hi = t_arr + tau0
    # The bracket endpoint carries the whole available integral: P(t) - P(-tau0) = P(t) + C.
    if np.any(P_t + 1e-12 * max(1.0, C) < 0):
        raise DomainError(f"available integral for species {i} is below C_{i}")

    def g(x):
        return P_t - traj.primitive(i, t_arr - x) - C

    tau_hat = bisect_increasing(g, np.zeros_like(t_arr), hi, xtol=1e-15)
    resid = np.abs(g(tau_hat))
    if np.any(resid > TAU_HAT_RESIDUAL * max(1.0, C)):
        raise DomainError(f"delay integral residual {resid.max():.3e} above tolerance")
    return tau_hat if np.ndim(t) else float(tau_hat[0])


def _tau_from_integral_scalar(traj, i, t, C, tau0):
    if t < 0 or t > traj.t_current:
        raise DomainError(f"t must lie in [0, {traj.t_current}]")
    P_t = traj.primitive_scalar(i, t)
    if P_t + 1e-12 * max(1.0, C) < 0:
        raise DomainError(f"available integral for species {i} is below C_{i}")

    def g(x):
        return P_t - traj.primitive_scalar(i, t - x) - C

    tau_hat = bisect_scalar(g, 0.0, t + tau0, xtol=1e-15)
    resid = abs(g(tau_hat))
    if resid > TAU_HAT_RESIDUAL * max(1.0, C):
        raise DomainError(f"delay integral residual {resid:.3e} above tolerance")
    return tau_hat


def conservation_residual(traj: DenseTrajectory, i: int, t=None):
    """integral_{t - tau_i(t)}^{t} f_i(Z_i) - C_i with the integrated tau_i.

    With ``t=None`` the residual is returned at every knot.
    """
    if traj.config.species[i].tau0 == 0:
        shape = traj.times.shape if t is None else np.shape(t)
        return np.zeros(shape) if shape else 0.0
    if t is None:
        ts = traj.times
        tau = traj.tau_knots[:, i]
    else:
        ts = np.atleast_1d(np.asarray(t, dtype=float))
        tau = traj.tau_at(ts)[:, i]
    r = traj.primitive(i, ts) - traj.primitive(i, ts - tau) - traj.C[i]
    return r if (t is None or np.ndim(t)) else float(r[0])


def _lag_in_segment(traj, i, k):
    v = traj
    T = v.times
    tau, dtau = v.tau_knots[:, i], v.dtau_knots[:, i]
    t0, t1 = T[k], T[k + 1]
    return lambda s: s - hermite(t0, t1, tau[k], tau[k + 1], dtau[k], dtau[k + 1], s)


def detect_tstar(traj: DenseTrajectory, i: int) -> Optional[float]:
    """Time where the lag t - tau_i(t) crosses zero, or None if not reached yet."""
    if traj.config.species[i].tau0 == 0:
        return 0.0
    lag = traj.lag_knots[:, i]
    T = traj.times
    hits = np.nonzero(lag >= 0.0)[0]
    if hits.size == 0:
        return None
    k1 = int(hits[0])
    if lag[k1] == 0.0 or k1 == 0:
        return float(T[k1])
    k = k1 - 1
    g = _lag_in_segment(traj, i, k)
    return float(bisect_scalar(g, float(T[k]), float(T[k1]), xtol=1e-16))


def lag_at(traj: DenseTrajectory, i: int, s: float) -> float:
    return s - traj.eval_delay(i, s)


def lag_floor_check(traj: DenseTrajectory) -> bool:
    """Lags strictly increase along the knots and start at their floor -tau_i0."""
    lag = traj.lag_knots
    for i, sp in enumerate(traj.config.species):
        li = lag[:, i]
        if not np.all(np.diff(li) > 0):
            return False
        if abs(li[0] + sp.tau0) > 1e-12 * max(1.0, sp.tau0):
            return False
        if li.min() < li[0]:
            return False
    return True
