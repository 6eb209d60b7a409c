"""Long-run abundance bound and first breaking point against the fecundity beta on F1."""

import argparse
from dataclasses import replace

import numpy as np

from forestdde.cli import parse_range
from forestdde.delay import detect_tstar
from forestdde.fixtures import F1
from forestdde.integrator import IntegratorSettings, solve
from forestdde.model import ModelConfig, compute_normalization, equilibrium
from forestdde.verify import limsup_estimate


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--range", default="0.05:0.5:0.05")
    ap.add_argument("--t-end", type=float, default=1500.0)
    ap.add_argument("--h", type=float, default=0.05)
    args = ap.parse_args()
    base = F1()
    print(f"{'beta':>6} {'limsup A':>12} {'A* (closed form)':>17} {'t*':>10} {'conclusive':>10}")
    for beta in parse_range(args.range):
        cfg = ModelConfig([replace(base.species[0], beta=beta)], base.zeta)
        traj = solve(cfg, IntegratorSettings(h=args.h, t_end=args.t_end), residuals=False).trajectory
        est = limsup_estimate(traj)
        eq = equilibrium(cfg, 0, compute_normalization(cfg)[0])
        star = f"{eq[0]:17.6f}" if eq else f"{'-':>17}"
        val = f"{est.values[0]:12.6f}" if est.conclusive else f"{np.nan:12}"
        print(f"{beta:6.3f} {val} {star} {detect_tstar(traj, 0):10.5f} {str(est.conclusive):>10}")


if __name__ == "__main__":
    main()
