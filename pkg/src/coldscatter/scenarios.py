"""Named, versioned scenario presets and the runners behind the CLI."""

from __future__ import annotations

import json
import logging
import warnings
from dataclasses import asdict, dataclass, field, fields
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .cloud import CloudSpec, peak_density_from_N, resonant_optical_depth
from .montecarlo import Channel, EnsembleAverageRequest, SpectrumResult, average_spectrum
from .results import read_result, write_csv, write_json, write_result
from .scaling import ScalingMap, scale_spectrum, scaling_discrepancy

log = logging.getLogger(__name__)

PRESET_VERSION = "v1"


class AspectRatioWarning(UserWarning):
    pass


@dataclass
class ScenarioConfig:
    """Everything needed to reproduce one run.

    ``clouds`` are dicts of CloudSpec fields.  ``n_configs`` is either one
    count or one per cloud.  ``grid`` is an explicit list of detunings
    (gamma) or scan angles (rad).  For ``expand`` runs ``n_atoms``, ``r_l``
    and ``r_tr_series`` define the series and ``clouds`` is ignored.
    """

    scenario: str = "spectrum"
    name: str = "custom"
    clouds: list = field(default_factory=list)
    channels: list = field(default_factory=lambda: ["s_total"])
    grid: list = field(default_factory=list)
    n_configs: int | list = 1000
    seed: int = 0
    method: str = "eigen"
    delta: float = 0.0
    workers: int = 1
    exclusion_radius: float = 0.0
    out: str = "runs/out"
    scale_source: str | None = None
    n_atoms: int | None = None
    r_l: float | None = None
    r_tr_series: list = field(default_factory=list)
    preset_version: str = PRESET_VERSION

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        validate_config(d)
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in known})

    def counts(self) -> list[int]:
        if isinstance(self.n_configs, list):
            if len(self.n_configs) != len(self.clouds):
                raise ValueError("n_configs list must have one entry per cloud")
            return [int(m) for m in self.n_configs]
        return [int(self.n_configs)] * max(1, len(self.clouds))


def config_schema() -> dict:
    return json.loads(resources.files("coldscatter").joinpath("config.schema.json").read_text())


def validate_config(d: dict) -> None:
    jsonschema.validate(d, config_schema())


def _deg_grid(step_deg: float = 1.0) -> list[float]:
    n = int(round(360 / step_deg))
    return [float(v) for v in np.deg2rad(np.linspace(-180.0, 180.0, n + 1))]


def _detuning_grid(lo=-10.0, hi=5.0, step=0.5) -> list[float]:
    n = int(round((hi - lo) / step))
    return [float(v) for v in np.linspace(lo, hi, n + 1)]


def _cloud(rho0, r_tr, r_l, **kw) -> dict:
    return {"rho0": rho0, "r_tr": r_tr, "r_l": r_l, **kw}


PRESETS: dict[str, dict] = {
    "fig1": dict(
        scenario="spectrum",
        clouds=[_cloud(rho, 10.0, 30.0) for rho in (0.025, 0.05, 0.1)],
        channels=["s_total"], grid=_detuning_grid(), n_configs=1000,
    ),
    "fig1_reduced": dict(
        scenario="spectrum", clouds=[_cloud(0.025, 5.0, 15.0)],
        channels=["s_total"], grid=_detuning_grid(), n_configs=50,
    ),
    "fig2": dict(
        scenario="spectrum",
        clouds=[_cloud(0.025, 10.0, 30.0), _cloud(0.025, 10.0, 45.0), _cloud(0.025, 12.0, 36.0)],
        channels=["s_total"], grid=_detuning_grid(), n_configs=1000, scale_source="first",
    ),
    "fig3a": dict(
        scenario="spectrum",
        clouds=[_cloud(0.05, 10.0, 30.0), _cloud(0.05, 20.0, 30.0)],
        channels=["s_s", "s_p"], grid=_detuning_grid(), n_configs=400, scale_source="first",
    ),
    "fig3b": dict(
        scenario="spectrum",
        clouds=[_cloud(0.1, 10.0, 30.0), _cloud(0.1, 12.0, 36.0)],
        channels=["s_total", "p_total"], grid=_detuning_grid(-15.0, 8.0), n_configs=250,
        scale_source="first",
    ),
    "fig4": dict(
        scenario="angular",
        clouds=[_cloud(0.025, 10.0, 30.0), _cloud(0.025, 15.0, 45.0)],
        channels=["rhc_rhc", "rhc_lhc"], grid=_deg_grid(), n_configs=[3000, 1700],
        method="lu", scale_source="first",
    ),
    "fig4_reduced": dict(
        scenario="angular",
        clouds=[_cloud(0.025, 5.0, 15.0), _cloud(0.025, 7.5, 22.5)],
        channels=["rhc_rhc", "rhc_lhc"], grid=_deg_grid(), n_configs=[3000, 1700],
        method="lu", scale_source="first",
    ),
    "smoke": dict(
        scenario="angular", clouds=[_cloud(0.025, 5.0, 15.0)],
        channels=["rhc_rhc", "rhc_lhc"], grid=_deg_grid(5.0), n_configs=50, method="lu",
    ),
    "fig5": dict(
        scenario="expand", n_atoms=6800, r_l=60.0,
        r_tr_series=[8.0, 10.0, 12.0, 15.0, 20.0, 30.0], channels=["s_total"],
        grid=[0.0], n_configs=100, method="lu",
    ),
    "fig5_reduced": dict(
        scenario="expand", n_atoms=1500, r_l=30.0,
        r_tr_series=[5.0, 7.0, 10.0, 14.0, 20.0], channels=["s_total"],
        grid=[0.0], n_configs=60, method="lu",
    ),
}


def preset(name: str, **overrides) -> ScenarioConfig:
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    d = json.loads(json.dumps(PRESETS[name]))
    d["name"] = name
    d.update({k: v for k, v in overrides.items() if v is not None})
    return ScenarioConfig.from_dict(d)


def cloud_label(c: CloudSpec) -> str:
    tag = f"rho{c.rho0:g}_rtr{c.r_tr:g}_rl{c.r_l:g}"
    return tag if c.n_atoms is None else f"{tag}_N{c.n_atoms}"


def _request(cfg: ScenarioConfig, cloud: CloudSpec, m: int, grid_kind: str) -> EnsembleAverageRequest:
    return EnsembleAverageRequest(
        cloud=cloud,
        channels=tuple(Channel.parse(c) for c in cfg.channels),
        grid=tuple(float(g) for g in cfg.grid),
        grid_kind=grid_kind,
        n_configs=m,
        seed=cfg.seed,
        method=cfg.method,
        delta=cfg.delta,
    )


def _clouds(cfg: ScenarioConfig) -> list[CloudSpec]:
    out = []
    for c in cfg.clouds:
        c = dict(c)
        c.setdefault("exclusion_radius", cfg.exclusion_radius)
        out.append(CloudSpec(**c))
    if not out:
        raise ValueError("configuration lists no clouds")
    return out


def _write_scaled(cfg, clouds, results, out: Path) -> dict:
    """Companion scaled predictions from the reference cloud to every other cloud."""
    if cfg.scale_source is None:
        return {}
    if cfg.scale_source == "first":
        src_cloud, src = clouds[0], results[0]
    else:
        src = read_result(cfg.scale_source)
        src_cloud = CloudSpec(**src.manifest["request"]["cloud"])
    summary = {}
    for cloud, direct in zip(clouds, results):
        if cloud == src_cloud or not np.isclose(cloud.rho0, src_cloud.rho0):
            continue
        smap = ScalingMap.between(src_cloud, cloud)
        pred = scale_spectrum(src, smap)
        label = cloud_label(cloud)
        write_result(pred, out / f"scaled_{label}")
        metrics = {
            d.channel: {"max_z": d.max_z, "mean_z": d.mean_z, "shape_l2": d.shape_l2}
            for d in scaling_discrepancy(pred, direct)
        }
        write_json(out / f"scaled_{label}" / "discrepancy.json", metrics)
        summary[label] = metrics
    return summary


def _run_clouds(cfg: ScenarioConfig, grid_kind: str, progress=None) -> dict:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    clouds = _clouds(cfg)
    results: list[SpectrumResult] = []
    for cloud, m in zip(clouds, cfg.counts()):
        log.info("%s: N=%d, M=%d", cloud_label(cloud), cloud.atom_count, m)
        res = average_spectrum(_request(cfg, cloud, m, grid_kind), workers=cfg.workers, progress=progress)
        write_result(res, out / cloud_label(cloud), {"optical_depth_z": resonant_optical_depth(cloud)})
        results.append(res)
    scaled = _write_scaled(cfg, clouds, results, out)
    write_json(out / "manifest.json", {
        "config": cfg.to_dict(),
        "code_version": __version__,
        "clouds": [cloud_label(c) for c in clouds],
        "scaling": scaled,
    })
    return {"out": str(out), "results": results, "scaling": scaled}


def run_spectrum_scenario(cfg: ScenarioConfig, progress=None) -> dict:
    return _run_clouds(cfg, "detuning", progress)


def run_angular_scenario(cfg: ScenarioConfig, progress=None) -> dict:
    return _run_clouds(cfg, "angle", progress)


def run_expansion_scenario(cfg: ScenarioConfig, progress=None) -> dict:
    if cfg.n_atoms is None or cfg.r_l is None or not cfg.r_tr_series:
        raise ValueError("expansion runs need n_atoms, r_l and r_tr_series")
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    counts = cfg.n_configs if isinstance(cfg.n_configs, list) else [cfg.n_configs] * len(cfg.r_tr_series)
    rows = []
    for r_tr, m in zip(cfg.r_tr_series, counts):
        if r_tr >= cfg.r_l:
            warnings.warn(
                f"r_tr={r_tr} >= r_l={cfg.r_l}: the cloud is no longer elongated and its "
                "aspect ratio departs from the experimental one",
                AspectRatioWarning,
                stacklevel=2,
            )
        rho0 = peak_density_from_N(cfg.n_atoms, r_tr, cfg.r_l)
        cloud = CloudSpec(rho0, float(r_tr), float(cfg.r_l), n_atoms=cfg.n_atoms,
                          exclusion_radius=cfg.exclusion_radius)
        res = average_spectrum(_request(cfg, cloud, int(m), "detuning"), workers=cfg.workers, progress=progress)
        write_result(res, out / cloud_label(cloud))
        rows.append((r_tr, rho0, resonant_optical_depth(cloud), res.mean[0, 0], res.stderr[0, 0]))
    rows.sort(key=lambda r: r[2])
    cols = list(zip(*rows))
    write_csv(out / "expansion.csv", ["r_tr", "rho0", "b_tr", "mean", "stderr"], cols)
    write_json(out / "manifest.json", {
        "config": cfg.to_dict(),
        "code_version": __version__,
        "n_atoms": cfg.n_atoms,
        "files": ["expansion.csv"],
    })
    return {"out": str(out), "rows": rows}


def run_scenario(cfg: ScenarioConfig, progress=None) -> dict:
    runners = {
        "spectrum": run_spectrum_scenario,
        "angular": run_angular_scenario,
        "expand": run_expansion_scenario,
    }
    return runners[cfg.scenario](cfg, progress)


def read_config_dict(path) -> dict:
    """Raw config from a config file or the ``config`` block of a run manifest."""
    d = json.loads(Path(path).read_text())
    if "config" in d and isinstance(d["config"], dict):
        d = d["config"]
    return d


def load_config(path) -> ScenarioConfig:
    return ScenarioConfig.from_dict(read_config_dict(path))


def merged_config(preset_name: str | None, config_path: str | None, overrides: dict) -> ScenarioConfig:
    base: dict = {}
    if preset_name:
        base = json.loads(json.dumps(PRESETS[preset_name]))
        base["name"] = preset_name
    if config_path:
        base.update(read_config_dict(config_path))
    base.update({k: v for k, v in overrides.items() if v is not None})
    return ScenarioConfig.from_dict(base)
