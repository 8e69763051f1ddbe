"""On-resonance intensity of a cloud expanding at constant atom number."""

import argparse

from coldscatter.scenarios import preset, run_scenario


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--preset", default="fig5_reduced", choices=["fig5", "fig5_reduced"])
    ap.add_argument("--configs", type=int, default=None)
    ap.add_argument("--seed", type=int, default=10)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", default="runs/expansion")
    args = ap.parse_args()

    cfg = preset(args.preset, n_configs=args.configs, seed=args.seed, workers=args.workers, out=args.out)
    rows = run_scenario(cfg)["rows"]
    top = max(r[3] for r in rows)
    print(f"{'r_tr':>6} {'rho0':>9} {'b_tr':>7} {'I/I_max':>8} {'stderr':>7}")
    for r_tr, rho0, b, mean, err in rows:
        print(f"{r_tr:6.1f} {rho0:9.4f} {b:7.2f} {mean / top:8.3f} {err / top:7.3f}")


if __name__ == "__main__":
    main()
