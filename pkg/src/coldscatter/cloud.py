"""Gaussian atomic clouds: sampling, atom numbers and optical depths.

Density profile n(r) = rho0 * exp(-(x^2 + z^2)/(2 r_tr^2) - y^2/(2 r_l^2)),
so the cloud's long axis is y and detection (z) is transverse.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

from .units import RESONANT_CROSS_SECTION

GAUSS_VOLUME = (2.0 * np.pi) ** 1.5
MAX_EXCLUSION_SWEEPS = 200


class EmptyCloudError(ValueError):
    pass


class SamplingError(RuntimeError):
    pass


@dataclass(frozen=True)
class CloudSpec:
    """Peak density ``rho0`` (units k0^3), Gaussian radii in 1/k0.

    ``n_atoms`` fixes the atom number; otherwise it is the rounded mean
    rho0 * (2 pi)^{3/2} r_tr^2 r_l.  ``exclusion_radius`` > 0 enables
    rejection resampling of atoms closer than that distance.
    """

    rho0: float
    r_tr: float
    r_l: float
    n_atoms: int | None = None
    exclusion_radius: float = 0.0

    def __post_init__(self):
        if not self.rho0 >= 0:
            raise ValueError(f"rho0 must be >= 0, got {self.rho0}")
        if not (self.r_tr > 0 and self.r_l > 0):
            raise ValueError("cloud radii must be positive")
        if self.n_atoms is not None and self.n_atoms < 0:
            raise ValueError("n_atoms must be non-negative")
        if self.exclusion_radius < 0:
            raise ValueError("exclusion_radius must be non-negative")

    @property
    def atom_count(self) -> int:
        if self.n_atoms is not None:
            return int(self.n_atoms)
        return int(round(self.rho0 * GAUSS_VOLUME * self.r_tr**2 * self.r_l))

    @property
    def radii(self) -> tuple[float, float, float]:
        """Gaussian radii along (x, y, z)."""
        return (self.r_tr, self.r_l, self.r_tr)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class RandomStreamId:
    """Counter-based substream: (master seed, configuration index, retry)."""

    seed: int
    index: int = 0
    attempt: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.index, self.attempt))
        return np.random.Generator(np.random.PCG64(ss))


@dataclass(frozen=True)
class AtomicConfiguration:
    positions: np.ndarray
    stream: RandomStreamId | None = None

    @property
    def n_atoms(self) -> int:
        return len(self.positions)


def peak_density_from_N(n_atoms: int, r_tr: float, r_l: float) -> float:
    if n_atoms < 1:
        raise ValueError("need at least one atom")
    if r_tr <= 0 or r_l <= 0:
        raise ValueError("cloud radii must be positive")
    return n_atoms / (GAUSS_VOLUME * r_tr**2 * r_l)


def transverse_radius_from_N(n_atoms: int, rho0: float, r_l: float) -> float:
    return float(np.sqrt(n_atoms / (GAUSS_VOLUME * rho0 * r_l)))


def resonant_optical_depth(spec: CloudSpec, axis: str = "z") -> float:
    """Line-centre optical depth through the cloud centre along ``axis``."""
    if axis not in ("x", "y", "z"):
        raise ValueError(f"unknown axis {axis!r}")
    radius = spec.r_l if axis == "y" else spec.r_tr
    return float(np.sqrt(2 * np.pi) * spec.rho0 * radius * RESONANT_CROSS_SECTION)


def detuned_optical_depth(b0: float, delta):
    if np.any(np.asarray(b0) < 0):
        raise ValueError("optical depth must be non-negative")
    return b0 * 0.25 / (np.square(delta) + 0.25)


def _close_atoms(pos: np.ndarray, rmin: float) -> np.ndarray:
    pairs = cKDTree(pos).query_pairs(rmin, output_type="ndarray")
    if len(pairs) == 0:
        return np.empty(0, dtype=int)
    # resample the second atom of each pair; the first one stays put
    return np.unique(pairs[:, 1])


def sample_configuration(spec: CloudSpec, stream: RandomStreamId) -> AtomicConfiguration:
    n = spec.atom_count
    if n < 1:
        raise EmptyCloudError("empty cloud: atom number rounds to zero")
    rng = stream.generator()
    scale = np.array(spec.radii)
    pos = rng.standard_normal((n, 3)) * scale

    if spec.exclusion_radius > 0:
        for _ in range(MAX_EXCLUSION_SWEEPS):
            bad = _close_atoms(pos, spec.exclusion_radius)
            if bad.size == 0:
                break
            pos[bad] = rng.standard_normal((bad.size, 3)) * scale
        else:
            raise SamplingError(
                f"could not enforce exclusion radius {spec.exclusion_radius} for "
                f"N={n} after {MAX_EXCLUSION_SWEEPS} sweeps ({bad.size} atoms still "
                f"too close; seed={stream.seed}, index={stream.index})"
            )
    return AtomicConfiguration(pos, stream)


def min_pair_distance(pos: np.ndarray) -> float:
    if len(pos) < 2:
        return np.inf
    d, _ = cKDTree(pos).query(pos, k=2)
    return float(d[:, 1].min())


def save_xyz(path, config: AtomicConfiguration | np.ndarray) -> None:
    pos = config.positions if isinstance(config, AtomicConfiguration) else config
    np.savetxt(Path(path), np.asarray(pos, dtype=float), fmt="%.17g", header="x y z")


def load_xyz(path) -> AtomicConfiguration:
    pos = np.loadtxt(Path(path), ndmin=2)
    if pos.shape[1] != 3:
        raise ValueError(f"{path}: expected three columns, got {pos.shape[1]}")
    return AtomicConfiguration(pos)
