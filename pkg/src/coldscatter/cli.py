from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from pathlib import Path

from . import __version__
from .cloud import CloudSpec
from .oracle_suite import format_table, run_oracle_suite
from .results import read_result, write_json, write_result
from .scaling import GridRangeError, ScalingMap, scale_spectrum, scaling_discrepancy
from .scenarios import PRESETS, merged_config, run_scenario

log = logging.getLogger("coldscatter")


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--preset", choices=sorted(PRESETS), help="named figure preset")
    p.add_argument("--config", metavar="JSON", help="config file or run manifest to replay")
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--configs", type=int, dest="n_configs", metavar="M")
    p.add_argument("--out", metavar="DIR")
    p.add_argument("--method", choices=["lu", "eigen"])
    p.add_argument("--exclusion-radius", type=float, dest="exclusion_radius")
    p.add_argument("--delta", type=float, help="detuning of an angular scan (gamma)")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coldscatter",
        description="Polarized light scattering from dense cold atomic clouds (coupled dipoles).",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_ in [
        ("spectrum", "configuration-averaged spectra at fixed detection direction"),
        ("angular", "configuration-averaged angular distributions"),
        ("expand", "on-resonance intensity vs optical depth at constant atom number"),
    ]:
        _add_run_flags(sub.add_parser(name, help=help_))

    scale = sub.add_parser("scale", help="apply the size scaling law to a stored result")
    scale.add_argument("--source", required=True, metavar="DIR")
    scale.add_argument("--r-tr", type=float, help="target transverse radius")
    scale.add_argument("--r-l", type=float, help="target longitudinal radius")
    scale.add_argument("--radii-xyz", type=float, nargs=3, metavar=("RX", "RY", "RZ"),
                       help="explicit target radii along x, y, z (z = detection axis)")
    scale.add_argument("--source-radii-xyz", type=float, nargs=3, metavar=("RX", "RY", "RZ"))
    scale.add_argument("--direct", metavar="DIR", help="direct simulation to compare against")
    scale.add_argument("--out", required=True, metavar="DIR")

    oracle = sub.add_parser("oracle", help="run the analytic oracle checks")
    oracle.add_argument("--seed", type=int, default=0)
    return parser


def _progress(done: int, total: int) -> None:
    if done == total or done % max(1, total // 20) == 0:
        log.info("  %d/%d configurations", done, total)


def _run(args) -> int:
    overrides = {k: getattr(args, k) for k in
                 ("seed", "workers", "n_configs", "out", "method", "exclusion_radius", "delta")}
    overrides["scenario"] = {"expand": "expand", "angular": "angular"}.get(args.command, "spectrum")
    if args.preset is None and args.config is None:
        raise SystemExit("give --preset or --config")
    if args.preset and PRESETS[args.preset]["scenario"] != overrides["scenario"]:
        raise SystemExit(f"preset {args.preset!r} is a {PRESETS[args.preset]['scenario']} scenario")
    if overrides["out"] is None and args.config is None:
        overrides["out"] = str(Path("runs") / args.preset)
    cfg = merged_config(args.preset, args.config, overrides)
    with warnings.catch_warnings():
        warnings.simplefilter("always")
        info = run_scenario(cfg, progress=_progress)
    print(f"wrote {info['out']}")
    for label, metrics in info.get("scaling", {}).items():
        for ch, m in metrics.items():
            print(f"scaled -> {label} [{ch}]: max z={m['max_z']:.2f} mean z={m['mean_z']:.2f}")
    return 0


def _scale(args) -> int:
    src = read_result(args.source)
    cloud = CloudSpec(**src.manifest["request"]["cloud"])
    source_radii = tuple(args.source_radii_xyz) if args.source_radii_xyz else cloud.radii
    if args.radii_xyz:
        target = tuple(args.radii_xyz)
    elif args.r_tr and args.r_l:
        target = (args.r_tr, args.r_l, args.r_tr)
    else:
        raise SystemExit("give --r-tr and --r-l, or --radii-xyz")
    smap = ScalingMap(source_radii, target, cloud.rho0)
    pred = scale_spectrum(src, smap)
    write_result(pred, args.out)
    print(f"wrote {args.out} (amplitude x{smap.amplitude_factor:.4g}, "
          f"detuning x{1 / smap.detuning_factor:.4g})")
    if args.direct:
        direct = read_result(args.direct)
        try:
            rows = scaling_discrepancy(pred, direct)
        except GridRangeError as exc:
            raise SystemExit(str(exc))
        payload = {d.channel: {"max_z": d.max_z, "mean_z": d.mean_z, "shape_l2": d.shape_l2}
                   for d in rows}
        write_json(Path(args.out) / "discrepancy.json", payload)
        print(json.dumps(payload, indent=2))
    return 0


def _oracle(args) -> int:
    rows = run_oracle_suite(args.seed)
    print(format_table(rows))
    return 0 if all(r[3] for r in rows) else 1


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(message)s")
    if args.command in ("spectrum", "angular", "expand"):
        return _run(args)
    if args.command == "scale":
        return _scale(args)
    return _oracle(args)


if __name__ == "__main__":
    sys.exit(main())
