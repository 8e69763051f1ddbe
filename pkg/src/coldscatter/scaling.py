"""Size scaling of scattering spectra between clouds of equal peak density.

A spectrum I0(delta) of a cloud with radii (rx0, ry0, rz0) maps onto a cloud
with radii (rx1, ry1, rz1) as

    I1(delta) = I0(delta * sqrt(rz0 / rz1)) * (rx1 / rx0) * (ry1 / ry0)

where z is the detection axis.  For the canonical geometry (rx, ry, rz) =
(r_tr, r_l, r_tr).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, replace

import numpy as np
from scipy.interpolate import PchipInterpolator

from .cloud import CloudSpec
from .montecarlo import SpectrumResult


class GridRangeError(ValueError):
    pass


@dataclass(frozen=True)
class ScalingMap:
    source: tuple[float, float, float]
    target: tuple[float, float, float]
    rho0: float | None = None

    def __post_init__(self):
        if min(self.source) <= 0 or min(self.target) <= 0:
            raise ValueError("all radii must be positive")

    @classmethod
    def between(cls, source: CloudSpec, target: CloudSpec, rtol: float = 1e-9) -> "ScalingMap":
        if not np.isclose(source.rho0, target.rho0, rtol=rtol, atol=0):
            raise ValueError(
                f"scaling requires equal peak densities, got {source.rho0} and {target.rho0}"
            )
        return cls(source.radii, target.radii, source.rho0)

    @property
    def amplitude_factor(self) -> float:
        (x0, y0, _), (x1, y1, _) = self.source, self.target
        return (x1 / x0) * (y1 / y0)

    @property
    def detuning_factor(self) -> float:
        """Source detuning = target detuning * this factor."""
        return float(np.sqrt(self.source[2] / self.target[2]))

    def inverse(self) -> "ScalingMap":
        return ScalingMap(self.target, self.source, self.rho0)


def _manifest_hash(manifest: dict) -> str:
    blob = json.dumps(manifest, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def scale_spectrum(source: SpectrumResult, smap: ScalingMap, grid=None) -> SpectrumResult:
    """Predict the target-cloud result from a source-cloud result.

    Without ``grid`` the source points are carried over exactly (abscissae
    divided by the detuning factor).  With ``grid`` the source is evaluated
    by monotone cubic interpolation; points that would need extrapolation
    raise GridRangeError.  Angular results only get the amplitude factor;
    their detuning moves as recorded in the manifest.
    """
    amp = smap.amplitude_factor
    c = smap.detuning_factor
    manifest = {
        "scaling_map": {"source": list(smap.source), "target": list(smap.target), "rho0": smap.rho0},
        "source_manifest_hash": _manifest_hash(source.manifest),
        "source_manifest": source.manifest,
    }
    if source.grid_kind == "angle":
        src_delta = source.manifest.get("request", {}).get("delta", 0.0)
        manifest["delta"] = src_delta / c
        return replace(source, mean=source.mean * amp, stderr=source.stderr * amp, manifest=manifest)

    if grid is None:
        return replace(
            source,
            grid=source.grid / c,
            mean=source.mean * amp,
            stderr=source.stderr * amp,
            manifest=manifest,
        )

    grid = np.asarray(grid, dtype=float)
    needed = grid * c
    lo, hi = source.grid.min(), source.grid.max()
    if needed.min() < lo - 1e-12 or needed.max() > hi + 1e-12:
        raise GridRangeError(
            f"source grid covers [{lo}, {hi}] but the target grid needs "
            f"[{needed.min()}, {needed.max()}]"
        )
    needed = np.clip(needed, lo, hi)
    mean = PchipInterpolator(source.grid, source.mean, axis=1)(needed) * amp
    stderr = PchipInterpolator(source.grid, source.stderr, axis=1)(needed) * amp
    return replace(source, grid=grid, mean=mean, stderr=np.abs(stderr), manifest=manifest)


@dataclass(frozen=True)
class Discrepancy:
    channel: str
    max_z: float
    mean_z: float
    shape_l2: float
    z: np.ndarray
    grid: np.ndarray


def _on_grid(result: SpectrumResult, grid: np.ndarray, i: int):
    m = result.mean[i]
    s = result.stderr[i]
    if result.grid.shape == grid.shape and np.array_equal(result.grid, grid):
        return m, s
    return (PchipInterpolator(result.grid, m)(grid),
            np.abs(PchipInterpolator(result.grid, s)(grid)))


def scaling_discrepancy(predicted: SpectrumResult, direct: SpectrumResult, mask=None) -> list[Discrepancy]:
    """z-score profile |predicted - direct| / combined stderr, per shared channel.

    Comparison happens on the direct result's grid points that fall inside
    the predicted grid; ``mask`` (boolean over the direct grid) restricts it
    further.
    """
    lo, hi = predicted.grid.min(), predicted.grid.max()
    keep = (direct.grid >= lo - 1e-12) & (direct.grid <= hi + 1e-12)
    if mask is not None:
        keep &= np.asarray(mask, dtype=bool)
    if not keep.any():
        raise GridRangeError("predicted and direct grids do not overlap")
    grid = direct.grid[keep]
    out = []
    for label in direct.channels:
        if label not in predicted.channels:
            continue
        j = direct.channels.index(label)
        d, sd = direct.mean[j][keep], direct.stderr[j][keep]
        p, sp = _on_grid(predicted, grid, predicted.channels.index(label))
        diff = np.abs(p - d)
        comb = np.sqrt(sp**2 + sd**2)
        with np.errstate(divide="ignore", invalid="ignore"):
            z = np.where(comb > 0, diff / comb, np.where(diff == 0, 0.0, np.inf))
        pn = p / p.max() if p.max() > 0 else p
        dn = d / d.max() if d.max() > 0 else d
        norm = np.linalg.norm(dn)
        shape = float(np.linalg.norm(pn - dn) / norm) if norm > 0 else 0.0
        out.append(Discrepancy(label, float(z.max()), float(z.mean()), shape, z, grid))
    if not out:
        raise ValueError("no channel in common")
    return out


def predicted_width_growth(b0_source: float, b0_target: float) -> float:
    if b0_source <= 0 or b0_target <= 0:
        raise ValueError("optical depths must be positive")
    return float(np.sqrt(b0_target / b0_source))
