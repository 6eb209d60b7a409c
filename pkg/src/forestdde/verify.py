"""Theorem-level checks on simulated trajectories and the comparison-argument certificates."""

from __future__ import annotations

import hashlib
import json
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy import integrate

from . import __version__
from .errors import UnsupportedError, ValidationError
from .history import DenseTrajectory
from .model import (InitialHistory, ModelConfig, compute_normalization, growth_ratio_bound,
                    history_total)
from .numerics import bisect_scalar

log = logging.getLogger(__name__)


@dataclass
class CheckResult:
    name: str
    passed: bool
    metric: float
    tolerance: float
    runtime: float = 0.0
    detail: str = ""


@dataclass
class VerificationReport:
    checks: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name, metric, tolerance, passed=None, runtime=0.0, detail=""):
        if any(c.name == name for c in self.checks):
            raise ValueError(f"duplicate check {name!r}")
        metric = float(metric)
        if passed is None:
            passed = metric <= tolerance
        self.checks.append(CheckResult(name, bool(passed), metric, float(tolerance), runtime, detail))
        return self.checks[-1]

    def extend(self, other: "VerificationReport"):
        for c in other.checks:
            self.add(c.name, c.metric, c.tolerance, c.passed, c.runtime, c.detail)

    def to_dict(self):
        return {"passed": self.passed, "checks": [asdict(c) for c in self.checks],
                "metadata": self.metadata}

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, default=_jsonable)


def _jsonable(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o))


def config_hash(config: ModelConfig) -> str:
    from .io import config_to_dict
    blob = json.dumps(config_to_dict(config), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


# -- comparison delays and certificates ---------------------------------------

def _comparison_integral(f, zeta_ii, m, mu_A, tau):
    val, _ = integrate.quad(lambda s: float(f(zeta_ii * m * math.exp(-mu_A * s))), 0.0, tau,
                            epsabs=1e-14, epsrel=1e-13, limit=200)
    return val


def comparison_delay(config: ModelConfig, i: int, m: float, C_i: float) -> float:
    """tau_{i,m}: the time the decaying comparison solution m e^{-mu_A t} needs to
    accumulate C_i of growth, i.e. integral_0^tau f_i(zeta_ii m e^{-mu_A s}) ds = C_i."""
    if not (m > 0 and C_i > 0):
        raise ValidationError(f"need m > 0 and C_i > 0, got m={m}, C_i={C_i}")
    sp = config.species[i]
    z = config.zeta[i][i]
    # integrand >= f(zeta m), so the root lies below C / f(zeta m)
    hi = C_i / float(sp.f(z * m))
    g = lambda tau: _comparison_integral(sp.f, z, m, sp.mu_A, tau) - C_i
    return bisect_scalar(g, 0.0, hi, xtol=1e-14)


@dataclass(frozen=True)
class ProofCertificate:
    i: int
    m: float
    tau_i_m: float
    margin: float
    growth_bound: float
    valid: bool

    def reevaluate(self, config: ModelConfig) -> float:
        """Margin mu_A - beta e^{-mu_J tau} M_f(c) recomputed from the stored delay."""
        sp = config.species[self.i]
        return sp.mu_A - sp.beta * math.exp(-sp.mu_J * self.tau_i_m) * self.growth_bound


def coupling_ratio(config: ModelConfig, i: int) -> float:
    return sum(config.zeta[i]) / config.zeta[i][i]


def boundedness_certificate(config: ModelConfig, i: int, C_i: float,
                            rel_tol: float = 1e-6) -> ProofCertificate:
    """Smallest amplitude m (to ``rel_tol``) whose comparison delay makes the margin positive."""
    sp = config.species[i]
    M = growth_ratio_bound(sp.f, coupling_ratio(config, i))

    def margin(m):
        tau = comparison_delay(config, i, m, C_i)
        return sp.mu_A - sp.beta * math.exp(-sp.mu_J * tau) * M, tau

    m = 1.0
    mg, tau = margin(m)
    if mg > 0:
        # shrink towards the smallest certifying amplitude
        lo = m
        while mg > 0 and m > 1e-12:
            lo, m = m, m / 2
            mg, tau = margin(m)
        if mg > 0:
            return ProofCertificate(i, m, tau, mg, M, True)
        lo, hi = m, lo
    else:
        lo = m
        for _ in range(200):
            m *= 2
            mg, tau = margin(m)
            if mg > 0:
                break
            lo = m
        else:
            return ProofCertificate(i, m, tau, mg, M, False)
        hi = m
    while hi - lo > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if margin(mid)[0] > 0:
            hi = mid
        else:
            lo = mid
    mg, tau = margin(hi)
    return ProofCertificate(i, hi, tau, mg, M, mg > 0)


def gamma_bound(config: ModelConfig, i: int, samples: int = 2001):
    """Diagnostic a priori bound while the lag is still negative.

    Gamma_i = beta_i sup phi_i / f_i(Z_i,phi) over the history; returns
    (Gamma_i, A_hat) where A_hat >= phi_i(0) is where -mu_A A + Gamma_i f_i(zeta_ii A)
    stops being positive. Usually loose; reported, never asserted.
    """
    sp = config.species[i]
    s = np.linspace(-sp.tau0, 0.0, samples) if sp.tau0 > 0 else np.zeros(1)
    Z = history_total(config, i)
    gamma = sp.beta * float(np.max(sp.history(s) / sp.f(Z(s))))
    f = sp.f.scalar()
    z = config.zeta[i][i]
    g = lambda a: sp.mu_A * a - gamma * f(z * a)  # increasing
    hi = 1.0
    while g(hi) < 0:
        hi *= 2
    root = bisect_scalar(g, 0.0, hi, xtol=1e-14)
    return gamma, max(float(sp.history(0.0)), root)


# -- long-run behaviour -----------------------------------------------------

@dataclass(frozen=True)
class LimsupEstimate:
    values: Optional[tuple]  # None when the run is too short
    conclusive: bool
    trend: tuple  # relative change of the window max, second half vs first half
    t_end: float

    @property
    def unbounded(self) -> bool:
        return any(tr > 0.01 for tr in self.trend)


def limsup_estimate(traj: DenseTrajectory, window_fraction: float = 0.2) -> LimsupEstimate:
    """Per-species max of A_i over the trailing window [(1 - w) t_end, t_end]."""
    if not 0 < window_fraction < 1:
        raise ValidationError("window_fraction must lie in (0, 1)")
    T = traj.times
    t_end = float(T[-1])
    A = traj.A_knots
    lag_end = traj.lag_knots[-1]
    conclusive = bool(np.all(lag_end > 0.8 * t_end))
    lo = (1 - window_fraction) * t_end
    mid = (1 - window_fraction / 2) * t_end
    win = T >= lo
    first = win & (T <= mid)
    second = T >= mid
    trend = tuple(float(b / a - 1.0) for a, b in zip(A[first].max(axis=0), A[second].max(axis=0)))
    values = tuple(float(v) for v in A[win].max(axis=0)) if conclusive else None
    return LimsupEstimate(values, conclusive, trend, t_end)


def window_max(traj: DenseTrajectory, lo: float, hi: float) -> np.ndarray:
    T = traj.times
    sel = (T >= lo) & (T <= hi)
    return traj.A_knots[sel].max(axis=0)


def growth_trend(traj: DenseTrajectory, early=(0.4, 0.5), late=(0.8, 1.0)) -> np.ndarray:
    """Relative difference of the late-window max against the early-window max."""
    t_end = traj.t_current
    a = window_max(traj, early[0] * t_end, early[1] * t_end)
    b = window_max(traj, late[0] * t_end, late[1] * t_end)
    return (b - a) / a


# -- dissipativity -----------------------------------------------------------

@dataclass(frozen=True)
class InitialCondition:
    """A point (phi, tau0) of the initial-data space."""

    histories: tuple
    tau0: tuple

    def apply(self, config: ModelConfig) -> ModelConfig:
        species = [replace(sp, history=h, tau0=t)
                   for sp, h, t in zip(config.species, self.histories, self.tau0)]
        return ModelConfig(species, config.zeta)

    @classmethod
    def from_config(cls, config: ModelConfig) -> "InitialCondition":
        return cls(tuple(sp.history for sp in config.species), tuple(sp.tau0 for sp in config.species))


class IntakeError(ValidationError):
    """An ensemble member lies outside the admissible set D_delta."""


def check_intake(config: ModelConfig, delta: float, member: InitialCondition, index: int = 0):
    """Every tau_i0 > 0 and every delay integral C_i >= delta; returns the C vector."""
    cfg = member.apply(config)
    C = compute_normalization(cfg).C
    for i, (c, t0) in enumerate(zip(C, member.tau0)):
        if not t0 > 0:
            raise IntakeError(f"member {index}, species {i}: tau0 = {t0} must be > 0")
        if c < delta:
            raise IntakeError(
                f"member {index}, species {i}: delay integral {c:.6g} < delta {delta:.6g}"
            )
    return C


def dissipativity_suite(config: ModelConfig, delta: float, ensemble: Sequence[InitialCondition],
                        settings, window_fraction: float = 0.2, tolerance: float = 0.05,
                        workers: int = 1) -> VerificationReport:
    """Run every member, estimate limsup A_i, and test that the estimates share one bound."""
    from .integrator import solve

    if not delta >= 0:
        raise ValidationError("delta must be >= 0")
    for k, m in enumerate(ensemble):
        check_intake(config, delta, m, k)
    start = time.perf_counter()

    def run(member):
        res = solve(member.apply(config), settings, residuals=False)
        return limsup_estimate(res.trajectory, window_fraction)

    with ThreadPoolExecutor(max_workers=max(1, workers)) as ex:
        estimates = list(ex.map(run, ensemble))
    report = VerificationReport(metadata={
        "delta": delta, "members": len(ensemble), "t_end": settings.t_end, "h": settings.h,
        "window_fraction": window_fraction,
    })
    elapsed = time.perf_counter() - start
    if not all(e.conclusive for e in estimates):
        report.add("dissipativity.conclusive", 1.0, 0.0, passed=False, runtime=elapsed,
                   detail="a run ended before its lags passed 0.8 t_end; extend t_end")
        return report
    L = np.array([e.values for e in estimates])  # members x species
    M_hat = float(L.max())
    report.metadata["M_hat"] = M_hat
    report.metadata["limsup"] = L.tolist()
    report.add("dissipativity.below_bound", float((L - M_hat).max()), 0.0, runtime=elapsed)
    spread = float(((L.max(axis=0) - L.min(axis=0)) / L.max(axis=0)).max())
    report.add("dissipativity.ic_independence", spread, tolerance,
               detail=f"max over species of (max - min)/max of limsup estimates; M_hat={M_hat:.6g}")
    return report


def amplitude_ensemble(config: ModelConfig, amplitudes=(0.1, 1.0, 10.0, 100.0)):
    """Constant-history members at the given amplitudes, each keeping the config's C_i."""
    from .fixtures import amplitude_member

    C = compute_normalization(config).C
    return [InitialCondition.from_config(amplitude_member(config, a, C)) for a in amplitudes]
