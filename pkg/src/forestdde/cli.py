"""Command-line entry points: run, verify, sweep, equilibrium.

Exit codes: 0 success, 1 validation error, 2 numerical failure, 3 verification failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from decimal import Decimal, InvalidOperation

from .errors import DomainError, NumericalError, UnsupportedError, ValidationError
from .integrator import solve
from .io import (config_from_dict, config_to_dict, format_rows, load, run_metadata,
                 write_metadata, write_trajectory_csv)
from .model import compute_normalization, equilibrium
from .delay import detect_tstar
from .suites import parse_suites, run_suites
from .verify import limsup_estimate

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_VERIFY = 0, 1, 2, 3

log = logging.getLogger("forestdde")


def _run(args):
    config, settings = load(args.config, h=args.h, t_end=args.t_end)
    result = solve(config, settings)
    write_trajectory_csv(args.out, result)
    write_metadata(args.out + ".meta.json", run_metadata(config, result))
    log.info("wrote %d rows to %s", result.trajectory.times.size, args.out)
    return EXIT_OK


def _verify(args):
    config, settings = load(args.config)
    names = parse_suites(args.suite)
    report = run_suites(config, names, settings)
    text = report.to_json() + "\n"
    if args.out:
        with open(args.out, "w", newline="\n") as fh:
            fh.write(text)
    for c in report.checks:
        print(f"{'PASS' if c.passed else 'FAIL'} {c.name} metric={c.metric:.3e} tol={c.tolerance:.3e}")
    return EXIT_OK if report.passed else EXIT_VERIFY


def parse_range(text: str):
    """'a:b:step' -> inclusive list of values on a fixed stride (decimal arithmetic)."""
    try:
        a, b, step = (Decimal(p) for p in text.split(":"))
    except (ValueError, InvalidOperation):
        raise ValidationError(f"range {text!r} must look like a:b:step") from None
    if step <= 0:
        raise ValidationError(f"range stride must be positive, got {step}")
    if b < a:
        raise ValidationError(f"range end {b} is below its start {a}")
    count = int((b - a) / step) + 1
    return [float(a + k * step) for k in range(count)]


def set_path(d: dict, path: str, value: float) -> dict:
    """Return a copy of the config dict with the scalar at dotted ``path`` replaced."""
    d = json.loads(json.dumps(d))
    keys = path.split(".")
    node = d
    try:
        for k in keys[:-1]:
            node = node[int(k)] if isinstance(node, list) else node[k]
        last = keys[-1]
        if isinstance(node, list):
            idx = int(last)
            old = node[idx]
            node[idx] = value
        else:
            old = node[last]
            node[last] = value
    except (KeyError, IndexError, ValueError, TypeError):
        raise ValidationError(f"unknown parameter path {path!r}") from None
    if isinstance(old, (list, dict, str)) or old is None:
        raise ValidationError(f"parameter path {path!r} does not name a scalar")
    return d


def _sweep(args):
    config, settings = load(args.config, h=args.h, t_end=args.t_end)
    base = config_to_dict(config)
    values = parse_range(args.range)
    configs = [config_from_dict(set_path(base, args.param, v)) for v in values]

    def one(cfg):
        traj = solve(cfg, settings, residuals=False).trajectory
        est = limsup_estimate(traj)
        ts = [detect_tstar(traj, i) for i in range(cfg.n)]
        return est, ts

    with ThreadPoolExecutor(max_workers=max(1, args.workers)) as ex:
        out = list(ex.map(one, configs))
    n = config.n
    header = [args.param] + [f"limsup_{i + 1}" for i in range(n)] + [f"tstar_{i + 1}" for i in range(n)]
    rows = []
    for v, (est, ts) in sorted(zip(values, out), key=lambda r: r[0]):
        lim = list(est.values) if est.conclusive else [None] * n
        rows.append([v] + lim + ts)
    with open(args.out, "w", newline="\n") as fh:
        fh.write(format_rows(header, rows))
    return EXIT_OK


def _equilibrium(args):
    config, _ = load(args.config)
    C = compute_normalization(config)
    out = []
    for i in range(config.n):
        try:
            eq = equilibrium(config, i, C[i])
        except UnsupportedError as exc:
            out.append({"species": i + 1, "A_star": None, "tau_bar": None, "note": str(exc)})
            continue
        if eq is None:
            out.append({"species": i + 1, "A_star": None, "tau_bar": None,
                        "note": "no positive steady state"})
        else:
            out.append({"species": i + 1, "A_star": eq[0], "tau_bar": eq[1]})
    print(json.dumps({"C": list(C.C), "equilibria": out}, indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="forestdde", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="integrate a configuration and write the trajectory CSV")
    r.add_argument("--config", required=True)
    r.add_argument("--t-end", type=float)
    r.add_argument("--h", type=float)
    r.add_argument("--out", required=True)
    r.set_defaults(func=_run)

    v = sub.add_parser("verify", help="run verification suites and write a JSON report")
    v.add_argument("--config", required=True)
    v.add_argument("--suite", default="all", help="comma-separated suite names or 'all'")
    v.add_argument("--out")
    v.set_defaults(func=_verify)

    s = sub.add_parser("sweep", help="vary one scalar parameter over an inclusive range")
    s.add_argument("--config", required=True)
    s.add_argument("--param", required=True, help="dotted path, e.g. species.0.beta")
    s.add_argument("--range", required=True, help="a:b:step")
    s.add_argument("--out", required=True)
    s.add_argument("--t-end", type=float)
    s.add_argument("--h", type=float)
    s.add_argument("--workers", type=int, default=4)
    s.set_defaults(func=_sweep)

    e = sub.add_parser("equilibrium", help="print the steady state of each species")
    e.add_argument("--config", required=True)
    e.set_defaults(func=_equilibrium)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValidationError, DomainError, UnsupportedError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (NumericalError, FloatingPointError, OverflowError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
