"""Does competition from a delayed species hold back a species with tau0 = 0?

Species 1 has tau0 = 0, so its delay stays 0 and the ratio f(Z(t)) / f(Z(t - tau))
is identically 1; its abundance follows exp((beta - mu_A) t) whatever the coupling.
This script records the growth rate against the coupling weight; nothing is asserted.
"""

import argparse
import math

import numpy as np

from forestdde.integrator import IntegratorSettings, solve
from forestdde.model import ModelConfig, SpeciesParams


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--t-end", type=float, default=60.0)
    ap.add_argument("--weights", type=float, nargs="+", default=[0.0, 0.5, 2.0, 10.0])
    args = ap.parse_args()
    fast = SpeciesParams(0.1, 0.05, 0.2, 0.0)
    slow = SpeciesParams(0.1, 0.05, 0.2, 2.0)
    print(f"{'zeta_12':>8} {'zeta_21':>8} {'growth rate of A_1':>19} {'beta - mu_A':>12} {'A_2(t_end)':>12}")
    for w in args.weights:
        cfg = ModelConfig([fast, slow], [[1.0, w], [w, 1.0]])
        traj = solve(cfg, IntegratorSettings(h=0.02, t_end=args.t_end), residuals=False).trajectory
        T, A = traj.times, traj.A_knots
        late = T > 0.5 * args.t_end
        rate = np.polyfit(T[late], np.log(A[late, 0]), 1)[0]
        print(f"{w:8.3g} {w:8.3g} {rate:19.12f} {0.1:12.3f} {A[-1, 1]:12.5g}")


if __name__ == "__main__":
    main()
