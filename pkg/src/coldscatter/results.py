"""CSV + JSON manifest serialization of averaged results."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .montecarlo import SpectrumResult

MANIFEST = "manifest.json"


def _fmt(v: float) -> str:
    return repr(float(v))


def csv_name(grid_kind: str, label: str) -> str:
    prefix = "spectrum" if grid_kind == "detuning" else "angular"
    return f"{prefix}_{label}.csv"


def write_csv(path, header: list[str], columns: list) -> None:
    cols = [np.asarray(c, dtype=float) for c in columns]
    lines = [",".join(header)]
    for row in zip(*cols):
        lines.append(",".join(_fmt(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def read_csv(path) -> tuple[list[str], np.ndarray]:
    text = Path(path).read_text().splitlines()
    header = text[0].split(",")
    data = np.array([[float(v) for v in line.split(",")] for line in text[1:] if line])
    return header, data.reshape(-1, len(header))


def write_json(path, payload) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True, default=_jsonable) + "\n")


def _jsonable(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def write_result(result: SpectrumResult, out_dir, extra_manifest: dict | None = None) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = []
    for i, label in enumerate(result.channels):
        p = out / csv_name(result.grid_kind, label)
        write_csv(p, [result.grid_kind, "mean", "stderr"], [result.grid, result.mean[i], result.stderr[i]])
        files.append(p)
    manifest = dict(result.manifest)
    manifest.update(extra_manifest or {})
    manifest["grid_kind"] = result.grid_kind
    manifest["channels"] = list(result.channels)
    manifest["files"] = [f.name for f in files]
    manifest["n_configs"] = result.n_configs
    write_json(out / MANIFEST, manifest)
    return files


def read_result(out_dir) -> SpectrumResult:
    out = Path(out_dir)
    manifest = json.loads((out / MANIFEST).read_text())
    kind = manifest["grid_kind"]
    means, errs, grid = [], [], None
    for label in manifest["channels"]:
        _, data = read_csv(out / csv_name(kind, label))
        grid = data[:, 0]
        means.append(data[:, 1])
        errs.append(data[:, 2])
    return SpectrumResult(
        grid=grid,
        channels=tuple(manifest["channels"]),
        mean=np.array(means),
        stderr=np.array(errs),
        n_configs=int(manifest["n_configs"]),
        grid_kind=kind,
        manifest=manifest,
    )
