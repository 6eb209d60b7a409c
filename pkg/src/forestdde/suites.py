"""Named verification suites shared by the ``verify`` command and the acceptance tests.

Each ``check_*`` function runs the solves it needs and returns a VerificationReport whose
check names are prefixed by the suite name. Suites that do not apply to a configuration
(e.g. the constant-delay transform for n > 1) return an empty report with a ``skipped``
note in the metadata.
"""

from __future__ import annotations

import math
import time
from dataclasses import replace

import numpy as np

from .delay import conservation_residual, detect_tstar, lag_at, lag_floor_check, tau_from_integral
from .errors import ValidationError
from .fixtures import AMPLITUDES, amplitude_member
from .integrator import IntegratorSettings, solve
from .model import (InitialHistory, ModelConfig, SpeciesParams, compute_normalization,
                    equilibrium)
from .pde import PdeParams, consistent_pde_init, pde_solve
from .smith import build_transform, smith_from_config
from .verify import (InitialCondition, IntakeError, VerificationReport, amplitude_ensemble,
                     boundedness_certificate, check_intake, comparison_delay, config_hash,
                     dissipativity_suite, growth_trend)

SUITES = ("degenerate", "conservation", "equivalence", "lag", "equilibrium", "boundedness",
          "dissipativity", "smith", "pde", "certificates")


def _skipped(name, why):
    return VerificationReport(metadata={"skipped": {name: why}})


def _single(config: ModelConfig, i: int) -> ModelConfig:
    return ModelConfig([config.species[i]], [[config.zeta[i][i]]])


def _row_uncoupled(config: ModelConfig, i: int) -> bool:
    return all(z == 0 for j, z in enumerate(config.zeta[i]) if j != i)


def check_degenerate(config: ModelConfig, t: float = 10.0, h: float = 0.01,
                     tol: float = 1e-8, runtime_limit: float = 1.0) -> VerificationReport:
    """Species 0 with tau0 = 0 against A(0) exp((beta - mu_A) t)."""
    sp = config.species[0]
    A0 = float(sp.history(0.0))
    cfg = ModelConfig([replace(sp, tau0=0.0, history=InitialHistory.constant(A0))],
                      [[config.zeta[0][0]]])
    start = time.perf_counter()
    res = solve(cfg, IntegratorSettings(h=h, t_end=t), residuals=False)
    elapsed = time.perf_counter() - start
    exact = A0 * math.exp((sp.beta - sp.mu_A) * t)
    rel = abs(res.trajectory.A_knots[-1, 0] / exact - 1.0)
    rep = VerificationReport()
    rep.add("degenerate.closed_form", rel, tol, runtime=elapsed, detail=f"t={t}, h={h}")
    rep.add("degenerate.runtime", elapsed, runtime_limit)
    return rep


def roundoff_floor(traj, i: int) -> float:
    """Smallest resolvable conservation residual: 100 ulp of the largest primitive value."""
    scale = max(1.0, abs(float(traj.primitive(i, traj.t_current))), traj.C[i])
    return 100.0 * np.finfo(float).eps * scale


def check_conservation(config: ModelConfig, h: float = 1e-3, t_end: float = 50.0,
                       tol: float = 1e-6, min_ratio: float = 8.0, reanchor_every: int = 100,
                       runtime_limit: float = 30.0, floor_exempt: bool = True) -> VerificationReport:
    """Max conservation residual at h, and its reduction when h is halved.

    With ``floor_exempt`` the halving check also passes when the residual at h/2 is already
    below the roundoff floor, where no further reduction is measurable.
    """
    rep = VerificationReport()
    errs = []
    floor = 0.0
    start = time.perf_counter()
    for hh in (h, h / 2):
        res = solve(config, IntegratorSettings(h=hh, t_end=t_end, reanchor_every=reanchor_every))
        errs.append(float(res.max_residual.max()))
        if hh == h:
            runtime_h = res.runtime
        floor = max(roundoff_floor(res.trajectory, i) for i in range(config.n))
    elapsed = time.perf_counter() - start
    scale = max(1.0, max(compute_normalization(config).C))
    rep.add("conservation.max_residual", errs[0], tol * scale, runtime=elapsed,
            detail=f"h={h}, t_end={t_end}")
    ratio = errs[0] / errs[1] if errs[1] > 0 else math.inf
    at_floor = errs[1] <= floor
    passed = ratio >= min_ratio or (floor_exempt and at_floor)
    detail = f"residual {errs[0]:.3e} at h, {errs[1]:.3e} at h/2, roundoff floor {floor:.1e}"
    if at_floor and ratio < min_ratio:
        detail += "; h/2 residual is at the roundoff floor"
    rep.add("conservation.halving_ratio", ratio, min_ratio, passed=passed, detail=detail)
    rep.add("conservation.runtime", elapsed, runtime_limit)
    rep.metadata["conservation"] = {"h": h, "residuals": errs, "roundoff_floor": floor,
                                    "runtime_at_h": runtime_h}
    return rep


def check_equivalence(config: ModelConfig, h: float = 0.01, t_end: float = 50.0,
                      tol: float = 1e-8, runtime_limit: float = 10.0) -> VerificationReport:
    """ODE-integrated tau (re-anchoring off) against the integral-equation root at every knot."""
    start = time.perf_counter()
    res = solve(config, IntegratorSettings(h=h, t_end=t_end, reanchor_every=0), residuals=False)
    traj = res.trajectory
    worst = 0.0
    for i in range(config.n):
        if config.species[i].tau0 == 0:
            continue
        tau_hat = tau_from_integral(traj, i, traj.times)
        worst = max(worst, float(np.abs(traj.tau_knots[:, i] - tau_hat).max()))
    elapsed = time.perf_counter() - start
    rep = VerificationReport()
    rep.add("equivalence.tau_ode_vs_integral", worst, tol, runtime=elapsed)
    rep.add("equivalence.runtime", elapsed, runtime_limit)
    return rep


def check_lags(config: ModelConfig, h: float = 0.01, t_end: float = 50.0,
               tol: float = 1e-10) -> VerificationReport:
    """Lag strictly increasing at the knots; each lag crosses 0 at a detected t*."""
    res = solve(config, IntegratorSettings(h=h, t_end=t_end), residuals=False)
    traj = res.trajectory
    rep = VerificationReport()
    increments = np.diff(traj.lag_knots, axis=0)
    rep.add("lag.strictly_increasing", float(-increments.min()), 0.0,
            passed=bool(np.all(increments > 0)) and lag_floor_check(traj),
            detail="metric is minus the smallest lag increment")
    for i in range(config.n):
        if config.species[i].tau0 == 0:
            continue
        ts = detect_tstar(traj, i)
        if ts is None:
            rep.add(f"lag.tstar_{i + 1}", math.inf, tol, passed=False,
                    detail="lag did not cross 0 before t_end")
        else:
            rep.add(f"lag.tstar_{i + 1}", abs(lag_at(traj, i, ts)), tol, detail=f"t*={ts:.12g}")
    return rep


def check_equilibrium(config: ModelConfig, i: int = 0, h: float = 0.01, t_end: float = 100.0,
                      tol: float = 1e-8, tstar_tol: float = 1e-6) -> VerificationReport:
    """Start species i (in isolation) on its steady state and watch it stay there."""
    if not _row_uncoupled(config, i):
        return _skipped("equilibrium", "cross-coupled row: no closed-form steady state")
    single = _single(config, i)
    C = compute_normalization(config)[i]
    eq = equilibrium(single, 0, C)
    if eq is None:
        return _skipped("equilibrium", "no positive steady state")
    A_star, tau_bar = eq
    sp = single.species[0]
    stat_A = sp.beta * math.exp(-sp.mu_J * tau_bar) - sp.mu_A
    stat_tau = tau_bar * float(sp.f(single.zeta[0][0] * A_star)) - C
    rep = VerificationReport(metadata={"A_star": A_star, "tau_bar": tau_bar})
    rep.add("equilibrium.stationarity_residual", max(abs(stat_A), abs(stat_tau)), 1e-10)
    cfg = ModelConfig([replace(sp, tau0=tau_bar, history=InitialHistory.constant(A_star))],
                      single.zeta)
    res = solve(cfg, IntegratorSettings(h=h, t_end=t_end), residuals=False)
    traj = res.trajectory
    dev = max(float(np.abs(traj.A_knots[:, 0] - A_star).max()),
              float(np.abs(traj.tau_knots[:, 0] - tau_bar).max()))
    rep.add("equilibrium.deviation", dev, tol, detail=f"A*={A_star:.12g}, tau_bar={tau_bar:.12g}")
    ts = detect_tstar(traj, 0)
    rep.add("equilibrium.tstar", math.inf if ts is None else abs(ts - tau_bar), tstar_tol,
            detail=f"t*={ts}")
    return rep


def _long_runs(config, amplitudes, h, t_end):
    C = compute_normalization(config).C
    members = [amplitude_member(config, a, C) for a in amplitudes]
    settings = IntegratorSettings(h=h, t_end=t_end)
    return [solve(m, settings, residuals=False) for m in members]


def check_boundedness(config: ModelConfig, amplitudes=AMPLITUDES, h: float = 0.05,
                      t_end: float = 1000.0, tol: float = 0.01,
                      runtime_limit: float = 120.0) -> VerificationReport:
    """Window max over [0.4, 0.5] t_end against [0.8, 1] t_end for every amplitude."""
    start = time.perf_counter()
    runs = _long_runs(config, amplitudes, h, t_end)
    elapsed = time.perf_counter() - start
    rep = VerificationReport()
    for a, res in zip(amplitudes, runs):
        trend = growth_trend(res.trajectory)
        rep.add(f"boundedness.trend_A0={a:g}", float(np.abs(trend).max()), tol,
                detail="relative change of the late window max against the early one")
    rep.add("boundedness.runtime", elapsed, runtime_limit)
    return rep


def check_dissipativity(config: ModelConfig, amplitudes=AMPLITUDES, h: float = 0.05,
                        t_end: float = 1000.0, tolerance: float = 0.05,
                        delta_fraction: float = 0.5) -> VerificationReport:
    """IC-independence of the limsup estimates plus intake rejection of a D_delta violator."""
    C = compute_normalization(config).C
    delta = delta_fraction * min(C)
    ensemble = amplitude_ensemble(config, amplitudes)
    rep = dissipativity_suite(config, delta, ensemble, IntegratorSettings(h=h, t_end=t_end))
    # a member whose delay integral is delta / 2 must be refused
    bad = ensemble[0]
    tau0 = list(bad.tau0)
    tau0[0] = tau0[0] * 0.5 * delta / C[0]
    bad = InitialCondition(bad.histories, tuple(tau0))
    try:
        check_intake(config, delta, bad, index=len(ensemble))
        rep.add("dissipativity.intake_rejects", 1.0, 0.0, passed=False,
                detail="member below delta was accepted")
    except IntakeError as exc:
        rep.add("dissipativity.intake_rejects", 0.0, 0.0, passed=True, detail=str(exc))
    return rep


def check_smith(config: ModelConfig, h: float = 0.01, t_end: float = 50.0,
                steps_per_delay: int = 100, tol: float = 1e-5,
                recovery_tol: float = 1e-6) -> VerificationReport:
    """Constant-delay reformulation against the direct solve, single species only."""
    if config.n != 1:
        return _skipped("smith", "the time change is single-species")
    if config.species[0].tau0 == 0:
        return _skipped("smith", "tau0 = 0: delta vanishes")
    res = solve(config, IntegratorSettings(h=h, t_end=t_end), residuals=False)
    traj = res.trajectory
    tr = build_transform(traj)
    sol = smith_from_config(config, tr.x_current, steps_per_delay)
    T = traj.times
    x = tr.Phi(T)
    rep = VerificationReport(metadata={"delta": tr.delta})
    rep.add("smith.W_vs_A", float(np.abs(sol.W_at(x) - traj.A_knots[:, 0]).max()), tol)
    rec = sol.recovered_delay(x)
    rep.add("smith.tau_recovery", float(np.abs(rec - traj.tau_knots[:, 0]).max()), recovery_tol)
    pull = tr.Phi(T - traj.tau_knots[:, 0]) - (x - tr.delta)
    rep.add("smith.pullback", float(np.abs(pull).max()), 1e-8)
    return rep


def check_pde(config: ModelConfig, Ns: int = 2000, t_end: float = 50.0, h: float = 0.01,
              tol: float = 0.02, min_ratio: float = 1.9,
              runtime_limit: float = 60.0) -> VerificationReport:
    """Upwind transport oracle against the delay solve for a matched constant-history variant."""
    if config.n != 1:
        return _skipped("pde", "oracle comparison is run for a single species")
    sp = config.species[0]
    if sp.history.kind != "constant":
        return _skipped("pde", "needs a constant history")
    params = PdeParams.from_config(config)
    A0 = sp.history.value
    start = time.perf_counter()
    errs = []
    for N in (Ns, 2 * Ns):
        grid, matched = consistent_pde_init(A0, params, Ns=N)
        series = pde_solve(grid, t_end)
        if N == Ns:
            ref = solve(matched, IntegratorSettings(h=h, t_end=t_end), residuals=False).trajectory
        A_sdde = ref.A_at(series.t)[:, 0]
        errs.append(float((np.abs(series.A - A_sdde) / A_sdde).max()))
    elapsed = time.perf_counter() - start
    rep = VerificationReport(metadata={"pde_errors": errs})
    rep.add("pde.sup_relative_error", errs[0], tol, detail=f"Ns={Ns}")
    ratio = errs[0] / errs[1]
    rep.add("pde.error_halving", ratio, min_ratio, passed=ratio >= min_ratio,
            detail=f"error {errs[1]:.3e} at Ns={2 * Ns}")
    rep.add("pde.runtime", elapsed, runtime_limit)
    return rep


def check_certificates(config: ModelConfig, rungs: int = 10) -> VerificationReport:
    """Comparison delays increase along a doubling ladder; certificates re-verify."""
    C = compute_normalization(config).C
    rep = VerificationReport()
    applicable = False
    for i, sp in enumerate(config.species):
        if not sp.f.has_growth_bound:
            continue
        applicable = True
        ms = [2.0 ** k for k in range(rungs)]
        taus = [comparison_delay(config, i, m, C[i]) for m in ms]
        inc = np.diff(taus)
        rep.add(f"certificates.monotone_{i + 1}", float(-inc.min()), 0.0,
                passed=bool(np.all(inc > 0)), detail="metric is minus the smallest increment")
        cert = boundedness_certificate(config, i, C[i])
        margin = cert.reevaluate(config)
        rep.add(f"certificates.margin_{i + 1}", -margin, 0.0, passed=cert.valid and margin > 0,
                detail=f"m={cert.m:.10g}, tau={cert.tau_i_m:.10g}, margin={margin:.3e}")
        rep.metadata[f"certificate_{i + 1}"] = {"m": cert.m, "tau_i_m": cert.tau_i_m,
                                                "margin": margin}
    if not applicable:
        return _skipped("certificates", "no species has a bounded growth ratio")
    return rep


_RUNNERS = {
    "degenerate": lambda c, s: check_degenerate(c),
    "conservation": lambda c, s: check_conservation(c, h=s.h, t_end=min(s.t_end, 50.0),
                                                    reanchor_every=s.reanchor_every or 100),
    "equivalence": lambda c, s: check_equivalence(c, h=s.h, t_end=min(s.t_end, 50.0)),
    "lag": lambda c, s: check_lags(c, h=s.h, t_end=s.t_end),
    "equilibrium": lambda c, s: check_equilibrium(c, h=s.h),
    "smith": lambda c, s: check_smith(c, h=s.h),
    "pde": lambda c, s: check_pde(c),
    "certificates": lambda c, s: check_certificates(c),
}


def parse_suites(spec: str):
    names = list(SUITES) if spec.strip() == "all" else [x.strip() for x in spec.split(",") if x.strip()]
    unknown = [x for x in names if x not in SUITES]
    if unknown or not names:
        raise ValidationError(f"unknown suite(s) {unknown}; choose from {', '.join(SUITES)} or 'all'")
    return names


def run_suites(config: ModelConfig, names, settings: IntegratorSettings = IntegratorSettings()
               ) -> VerificationReport:
    from . import __version__

    report = VerificationReport(metadata={"version": __version__, "config_hash": config_hash(config),
                                          "suites": list(names), "skipped": {}})
    long_h = max(settings.h, 0.05)
    for name in names:
        if name == "boundedness":
            sub = check_boundedness(config, h=long_h)
        elif name == "dissipativity":
            sub = check_dissipativity(config, h=long_h)
        else:
            sub = _RUNNERS[name](config, settings)
        report.extend(sub)
        report.metadata["skipped"].update(sub.metadata.pop("skipped", {}))
        report.metadata[name] = sub.metadata
    return report
