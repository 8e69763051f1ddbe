"""Compare the size-scaled spectrum of a small cloud with a direct simulation
of a larger cloud of the same peak density."""

import argparse

from coldscatter.cloud import CloudSpec
from coldscatter.scaling import ScalingMap, scale_spectrum, scaling_discrepancy
from coldscatter.scenarios import preset, run_scenario


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--rho0", type=float, default=0.025)
    ap.add_argument("--source", type=float, nargs=2, default=[5.0, 15.0], metavar=("R_TR", "R_L"))
    ap.add_argument("--target", type=float, nargs=2, default=[6.0, 18.0], metavar=("R_TR", "R_L"))
    ap.add_argument("--configs", type=int, default=400)
    ap.add_argument("--seed", type=int, default=8)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", default="runs/scaling_check")
    args = ap.parse_args()

    clouds = [{"rho0": args.rho0, "r_tr": a, "r_l": b} for a, b in (args.source, args.target)]
    cfg = preset("fig2", clouds=clouds, n_configs=args.configs, seed=args.seed,
                 workers=args.workers, out=args.out)
    source, direct = run_scenario(cfg)["results"]
    smap = ScalingMap.between(CloudSpec(**clouds[0]), CloudSpec(**clouds[1]))
    for d in scaling_discrepancy(scale_spectrum(source, smap), direct):
        print(f"{d.channel}: mean z {d.mean_z:.2f}, max z {d.max_z:.2f}, shape L2 {d.shape_l2:.3f}")
        for g, z in zip(d.grid, d.z):
            print(f"  delta {g:+6.2f}  z {z:5.2f}")


if __name__ == "__main__":
    main()
