"""Conservation residual and abundance error against the step size on F1 and F3.

Run with --depth 1 to stop tracking breaking points after t*; the residual then
drops to third order because the kink where a lag reaches t* falls inside a step.
"""

import argparse

import numpy as np

from forestdde.fixtures import F1, F3
from forestdde.integrator import IntegratorSettings, solve


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--t-end", type=float, default=50.0)
    ap.add_argument("--depth", type=int, default=2, help="breaking-point generations tracked")
    ap.add_argument("--steps", type=float, nargs="+", default=[0.08, 0.04, 0.02, 0.01, 0.005, 0.0025, 0.001])
    args = ap.parse_args()
    for name, cfg in (("F1", F1()), ("F3", F3())):
        ref = solve(cfg, IntegratorSettings(h=min(args.steps) / 2, t_end=args.t_end,
                                            breaking_depth=args.depth), residuals=False).trajectory
        print(f"\n{name}  (depth={args.depth}, t_end={args.t_end})")
        print(f"{'h':>8} {'max|residual|':>14} {'ratio':>7} {'max|A err|':>12} {'ratio':>7} {'runtime':>8}")
        prev = None
        for h in args.steps:
            res = solve(cfg, IntegratorSettings(h=h, t_end=args.t_end, breaking_depth=args.depth))
            tr = res.trajectory
            r = float(res.max_residual.max())
            e = float(np.abs(tr.A_knots - ref.A_at(tr.times)).max())
            rr = f"{prev[0] / r:7.2f}" if prev else " " * 7
            er = f"{prev[1] / e:7.2f}" if prev and e > 0 else " " * 7
            print(f"{h:8.4g} {r:14.3e} {rr} {e:12.3e} {er} {res.runtime:7.2f}s")
            prev = (r, e)


if __name__ == "__main__":
    main()
