"""Peak position and half width of a configuration-averaged spectrum.

Default is a cheap cloud (r_tr=5, r_l=15); pass --r-tr 10 --r-l 30 --configs 400
for the full-size check (hours on one core).
"""

import argparse

import numpy as np

from coldscatter.scenarios import preset, run_scenario


def half_width(grid, mean):
    i = int(np.argmax(mean))
    half = mean[i] / 2
    below = np.flatnonzero(mean < half)
    left = below[below < i]
    right = below[below > i]
    lo = np.interp(half, mean[[left[-1], left[-1] + 1]], grid[[left[-1], left[-1] + 1]]) if left.size else grid[0]
    hi = np.interp(half, mean[[right[0], right[0] - 1]], grid[[right[0], right[0] - 1]]) if right.size else grid[-1]
    return (hi - lo) / 2


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--rho0", type=float, default=0.05)
    ap.add_argument("--r-tr", type=float, default=5.0)
    ap.add_argument("--r-l", type=float, default=15.0)
    ap.add_argument("--configs", type=int, default=400)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", default="runs/red_shift")
    args = ap.parse_args()

    cfg = preset("fig1", clouds=[{"rho0": args.rho0, "r_tr": args.r_tr, "r_l": args.r_l}],
                 n_configs=args.configs, seed=args.seed, workers=args.workers, out=args.out)
    res = run_scenario(cfg)["results"][0]
    grid, mean = res.grid, res.mean[0]
    print(f"peak at delta = {grid[np.argmax(mean)]:+.2f} gamma")
    print(f"half width at half maximum = {half_width(grid, mean):.2f} gamma (single atom: 0.5)")


if __name__ == "__main__":
    main()
