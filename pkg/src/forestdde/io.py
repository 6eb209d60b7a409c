"""JSON configuration and CSV trajectory output."""

from __future__ import annotations

import io
import json
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ValidationError
from .integrator import IntegratorSettings, SolveResult
from .model import CompetitionFunction, InitialHistory, ModelConfig, SpeciesParams

_F_KEYS = {"kind", "kappa", "theta", "p", "rate"}
_HISTORY_KEYS = {
    "constant": ("value",),
    "linear": ("value", "slope"),
    "sinusoidal": ("value", "amplitude", "period", "phase"),
    "sampled": ("times", "values"),
}
_SETTINGS_KEYS = {f.name for f in fields(IntegratorSettings)}


def f_to_dict(f: CompetitionFunction) -> dict:
    d = {"kind": f.kind, "kappa": f.kappa}
    for k in ("theta", "p", "rate"):
        v = getattr(f, k)
        if v is not None:
            d[k] = v
    return d


def history_to_dict(h: InitialHistory) -> dict:
    d = {"kind": h.kind}
    for k in _HISTORY_KEYS[h.kind]:
        v = getattr(h, k)
        d[k] = list(v) if isinstance(v, tuple) else v
    return d


def config_to_dict(config: ModelConfig) -> dict:
    return {
        "species": [
            {"mu_A": sp.mu_A, "mu_J": sp.mu_J, "beta": sp.beta, "tau0": sp.tau0,
             "f": f_to_dict(sp.f), "history": history_to_dict(sp.history)}
            for sp in config.species
        ],
        "zeta": [list(row) for row in config.zeta],
    }


def emit_config(config: ModelConfig, settings: IntegratorSettings = None) -> str:
    d = config_to_dict(config)
    if settings is not None:
        d["settings"] = settings_to_dict(settings)
    return json.dumps(d, indent=2) + "\n"


def settings_to_dict(settings: IntegratorSettings) -> dict:
    return {f.name: getattr(settings, f.name) for f in fields(IntegratorSettings)}


def config_from_dict(d: dict) -> ModelConfig:
    if not isinstance(d, dict):
        raise ValidationError("config must be a JSON object")
    try:
        species_in = d["species"]
        zeta = d["zeta"]
    except KeyError as exc:
        raise ValidationError(f"config is missing the {exc.args[0]!r} key") from None
    if not isinstance(species_in, list) or not species_in:
        raise ValidationError("'species' must be a non-empty list")
    species = []
    for i, s in enumerate(species_in):
        where = f"species[{i}]"
        try:
            f_in = dict(s["f"])
            unknown = set(f_in) - _F_KEYS
            if unknown:
                raise ValidationError(f"{where}.f: unknown keys {sorted(unknown)}")
            f = CompetitionFunction(**f_in)
            h_in = dict(s.get("history", {"kind": "constant", "value": 1.0}))
            kind = h_in.pop("kind", "constant")
            if kind not in _HISTORY_KEYS:
                raise ValidationError(f"{where}.history: unknown kind {kind!r}")
            unknown = set(h_in) - set(_HISTORY_KEYS[kind])
            if unknown:
                raise ValidationError(f"{where}.history: unknown keys {sorted(unknown)}")
            if kind == "sampled":
                hist = InitialHistory.sampled(h_in["times"], h_in["values"])
            else:
                hist = InitialHistory(kind, **{k: float(v) for k, v in h_in.items()})
            species.append(SpeciesParams(float(s["mu_A"]), float(s["mu_J"]), float(s["beta"]),
                                         float(s["tau0"]), f, hist))
        except ValidationError as exc:
            raise ValidationError(f"{where}: {exc}") from None
        except KeyError as exc:
            raise ValidationError(f"{where} is missing {exc.args[0]!r}") from None
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"{where}: {exc}") from None
    return ModelConfig(species, zeta)


def settings_from_dict(d: dict, **overrides) -> IntegratorSettings:
    raw = dict(d.get("settings", {}) or {})
    unknown = set(raw) - _SETTINGS_KEYS
    if unknown:
        raise ValidationError(f"settings: unknown keys {sorted(unknown)}")
    raw.update({k: v for k, v in overrides.items() if v is not None})
    return IntegratorSettings(**raw)


def _load_json(path) -> dict:
    text = Path(path).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: JSON parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def parse_config(path) -> ModelConfig:
    return config_from_dict(_load_json(path))


def load(path, **overrides):
    """(ModelConfig, IntegratorSettings) from one JSON file; keyword overrides win."""
    d = _load_json(path)
    return config_from_dict(d), settings_from_dict(d, **overrides)


def trajectory_header(n: int) -> list:
    cols = ["t"]
    for name in ("A", "tau", "lag", "conservation_residual"):
        cols += [f"{name}_{i + 1}" for i in range(n)]
    return cols


def trajectory_table(result: SolveResult) -> np.ndarray:
    traj = result.trajectory
    return np.column_stack([traj.times, traj.A_knots, traj.tau_knots, traj.lag_knots,
                            result.residuals])


def format_rows(header, rows) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    return buf.getvalue()


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    return "%.17g" % v


def write_trajectory_csv(path, result: SolveResult):
    table = trajectory_table(result)
    text = format_rows(trajectory_header(result.trajectory.n), table)
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def run_metadata(config: ModelConfig, result: SolveResult) -> dict:
    return {
        "version": __version__,
        "config": config_to_dict(config),
        "settings": settings_to_dict(result.settings),
        "C": list(result.trajectory.C.C),
        "tstar": list(result.breaks.tstar),
        "restarts": [list(r) for r in result.breaks.restarts],
        "max_abs_conservation_residual": [float(x) for x in result.max_residual],
    }


def write_metadata(path, meta: dict):
    with open(path, "w", newline="\n") as fh:
        fh.write(json.dumps(meta, indent=2, sort_keys=True) + "\n")
