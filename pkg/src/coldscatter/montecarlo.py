"""Configuration averaging with reproducible, worker-count-independent results.

Configuration ``i`` always draws its atoms from the substream (seed, i), and
per-configuration intensities are folded into the running statistics in
index order, so the mean and standard error do not depend on how many
worker processes were used or in which order they finished.
"""

from __future__ import annotations

import logging
import multiprocessing
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import partial
from typing import Literal

import numpy as np
from threadpoolctl import threadpool_limits

from . import __version__
from .cloud import CloudSpec, RandomStreamId, SamplingError, sample_configuration
from .kernel import CoincidentAtomsError, build_self_energy
from .solver import (
    EigenCache,
    ShiftedLU,
    SolverError,
    channel_intensities,
    field_vectors,
    projection_vector,
    relative_residual,
    source_vector,
    transverse_basis,
)
from .units import DIPOLE_SQ, EZ, INCIDENCE_ANGLE, incident_direction, make_polarization, scan_direction

log = logging.getLogger(__name__)

MAX_RETRIES = 3
GridKind = Literal["detuning", "angle"]


class ConfigurationFailure(RuntimeError):
    def __init__(self, seed: int, index: int, cause: Exception):
        super().__init__(
            f"configuration {index} (seed {seed}) failed after {MAX_RETRIES} retries: {cause}"
        )
        self.seed = seed
        self.index = index


@dataclass(frozen=True)
class Channel:
    """Incident polarization and analyzer (None = no polarization analysis)."""

    in_pol: str
    out_pol: str | None = None

    @property
    def label(self) -> str:
        return f"{self.in_pol}_{self.out_pol or 'total'}"

    @classmethod
    def parse(cls, text: str) -> "Channel":
        a, _, b = text.partition("_")
        return cls(a, None if b in ("", "total") else b)


@dataclass(frozen=True)
class EnsembleAverageRequest:
    cloud: CloudSpec
    channels: tuple[Channel, ...]
    grid: tuple[float, ...]
    grid_kind: GridKind = "detuning"
    n_configs: int = 1000
    seed: int = 0
    method: Literal["lu", "eigen"] = "eigen"
    delta: float = 0.0
    incidence: float = INCIDENCE_ANGLE

    def __post_init__(self):
        if self.n_configs < 1:
            raise ValueError("need at least one configuration")
        if len(self.grid) == 0 or not np.all(np.isfinite(self.grid)):
            raise ValueError("grid must be non-empty and finite")
        if not self.channels:
            raise ValueError("need at least one channel")
        if self.grid_kind not in ("detuning", "angle"):
            raise ValueError(f"unknown grid kind {self.grid_kind!r}")
        if self.method not in ("lu", "eigen"):
            raise ValueError(f"unknown method {self.method!r}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["channels"] = [c.label for c in self.channels]
        d["grid"] = list(self.grid)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "EnsembleAverageRequest":
        d = dict(d)
        d["cloud"] = CloudSpec(**d["cloud"])
        d["channels"] = tuple(Channel.parse(c) for c in d["channels"])
        d["grid"] = tuple(float(g) for g in d["grid"])
        return cls(**d)


class RunningStats:
    """One-pass (Welford) mean and variance of array-valued samples."""

    def __init__(self, shape):
        self.count = 0
        self.mean = np.zeros(shape)
        self.m2 = np.zeros(shape)

    def push(self, x):
        x = np.asarray(x, dtype=float)
        self.count += 1
        delta = x - self.mean
        self.mean = self.mean + delta / self.count
        self.m2 = self.m2 + delta * (x - self.mean)

    def merge(self, other: "RunningStats") -> "RunningStats":
        """Chan et al. pairwise combination; merge order must be fixed by the caller."""
        out = RunningStats(self.mean.shape)
        n = self.count + other.count
        if n == 0:
            return out
        delta = other.mean - self.mean
        out.count = n
        out.mean = self.mean + delta * (other.count / n)
        out.m2 = self.m2 + other.m2 + delta**2 * (self.count * other.count / n)
        return out

    @property
    def variance(self) -> np.ndarray:
        if self.count < 2:
            return np.full_like(self.mean, np.nan)
        return self.m2 / (self.count - 1)

    @property
    def stderr(self) -> np.ndarray:
        return np.sqrt(self.variance / self.count)


@dataclass
class SpectrumResult:
    grid: np.ndarray
    channels: tuple[str, ...]
    mean: np.ndarray
    stderr: np.ndarray
    n_configs: int
    grid_kind: str = "detuning"
    manifest: dict = field(default_factory=dict)

    def channel(self, label: str) -> tuple[np.ndarray, np.ndarray]:
        i = self.channels.index(label)
        return self.mean[i], self.stderr[i]


def _sources(req: EnsembleAverageRequest, positions):
    k_in = incident_direction(req.incidence)
    pols = sorted({c.in_pol for c in req.channels})
    return k_in, {p: source_vector(positions, k_in, make_polarization(p, k_in)) for p in pols}


def _analyzers(channel: Channel, k_out) -> list[np.ndarray]:
    if channel.out_pol is None:
        return list(transverse_basis(k_out))
    return [make_polarization(channel.out_pol, k_out, frame_hint=np.array([0.0, 1.0, 0.0]))]


def _spectrum_eigen(req, positions, sigma) -> np.ndarray:
    cache = EigenCache(sigma)
    _, sources = _sources(req, positions)
    coeffs = {p: cache.coefficients(b) for p, b in sources.items()}
    # validate the decomposition once per configuration
    for p, b in sources.items():
        x = cache.vectors @ (coeffs[p] / (req.grid[0] - cache.eigenvalues))
        res = relative_residual(sigma, req.grid[0], x, b)
        if res >= 1e-8:
            raise SolverError(f"eigendecomposition residual {res:.2e} too large")
    out = np.zeros((len(req.channels), len(req.grid)))
    for i, ch in enumerate(req.channels):
        for e in _analyzers(ch, EZ):
            w = cache.left(projection_vector(positions, EZ, e))
            out[i] += np.abs(cache.amplitudes(req.grid, w, coeffs[ch.in_pol])) ** 2
    return out


def _spectrum_lu(req, positions, sigma) -> np.ndarray:
    _, sources = _sources(req, positions)
    pols = list(sources)
    b = np.stack([sources[p] for p in pols], axis=1)
    out = np.zeros((len(req.channels), len(req.grid)))
    for j, delta in enumerate(req.grid):
        x = ShiftedLU(sigma, delta).solve(b)
        for i, ch in enumerate(req.channels):
            xs = x[:, pols.index(ch.in_pol)]
            for e in _analyzers(ch, EZ):
                amp = DIPOLE_SQ * (projection_vector(positions, EZ, e) @ xs)
                out[i, j] += abs(amp) ** 2
    return out


def _angular(req, positions, sigma) -> np.ndarray:
    _, sources = _sources(req, positions)
    pols = list(sources)
    b = np.stack([sources[p] for p in pols], axis=1)
    if req.method == "lu":
        x = ShiftedLU(sigma, req.delta).solve(b)
    else:
        x = EigenCache(sigma).solve(req.delta, b)
    dirs = np.array([scan_direction(a) for a in req.grid])
    out = np.zeros((len(req.channels), len(req.grid)))
    fields = {p: field_vectors(x[:, k], positions, dirs) for k, p in enumerate(pols)}
    for i, ch in enumerate(req.channels):
        out[i] = channel_intensities(fields[ch.in_pol], dirs, ch.out_pol)
    return out


def configuration_intensities(req: EnsembleAverageRequest, index: int) -> np.ndarray:
    """Intensities (n_channels, n_grid) for configuration ``index``."""
    last = None
    for attempt in range(MAX_RETRIES + 1):
        stream = RandomStreamId(req.seed, index, attempt)
        try:
            positions = sample_configuration(req.cloud, stream).positions
            sigma = build_self_energy(positions)
            if req.grid_kind == "angle":
                return _angular(req, positions, sigma)
            if req.method == "eigen":
                return _spectrum_eigen(req, positions, sigma)
            return _spectrum_lu(req, positions, sigma)
        except (CoincidentAtomsError, SolverError, SamplingError) as exc:
            log.warning("configuration %d attempt %d failed: %s", index, attempt, exc)
            last = exc
    raise ConfigurationFailure(req.seed, index, last)


def _init_worker():
    threadpool_limits(1)


def average_spectrum(req: EnsembleAverageRequest, workers: int = 1, progress=None) -> SpectrumResult:
    t0 = time.perf_counter()
    stats = RunningStats((len(req.channels), len(req.grid)))
    task = partial(configuration_intensities, req)
    if workers <= 1:
        with threadpool_limits(1):
            for i in range(req.n_configs):
                stats.push(task(i))
                if progress:
                    progress(i + 1, req.n_configs)
    else:
        ctx = multiprocessing.get_context("fork")
        with ProcessPoolExecutor(workers, mp_context=ctx, initializer=_init_worker) as pool:
            for i, r in enumerate(pool.map(task, range(req.n_configs), chunksize=1)):
                stats.push(r)
                if progress:
                    progress(i + 1, req.n_configs)
    manifest = {
        "request": req.to_dict(),
        "seed": req.seed,
        "n_configs": req.n_configs,
        "n_atoms": req.cloud.atom_count,
        "exclusion_radius": req.cloud.exclusion_radius,
        "workers": workers,
        "wall_time_s": time.perf_counter() - t0,
        "code_version": __version__,
        "numpy_version": np.__version__,
    }
    return SpectrumResult(
        grid=np.asarray(req.grid, dtype=float),
        channels=tuple(c.label for c in req.channels),
        mean=stats.mean,
        stderr=stats.stderr,
        n_configs=stats.count,
        grid_kind=req.grid_kind,
        manifest=manifest,
    )


def convergence_report(result: SpectrumResult, target_rel: float = 0.05) -> dict:
    if result.n_configs < 2:
        raise ValueError("need at least two configurations for error estimates")
    if result.grid.size == 0:
        raise ValueError("empty grid")
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.where(result.mean > 0, result.stderr / result.mean, 0.0)
    worst = float(np.max(rel))
    ch, j = np.unravel_index(int(np.argmax(rel)), rel.shape)
    suggested = int(np.ceil(result.n_configs * (worst / target_rel) ** 2)) if worst > 0 else result.n_configs
    return {
        "max_rel_stderr": worst,
        "worst_channel": result.channels[ch],
        "worst_grid_value": float(result.grid[j]),
        "target_rel_stderr": target_rel,
        "suggested_n_configs": max(suggested, 2),
    }
