"""Dimensionless units and scattering-geometry conventions.

Lengths are measured in 1/k0, energies in hbar*gamma, detunings in gamma and
cross sections in 1/k0**2.  With these units the squared dipole moment of the
J=0 -> J=1 transition is 3/4, which makes the resonant single-atom cross
section 6*pi (= 3 lambda**2 / 2 pi).

Polarization frame: for a propagation direction k the s vector is the unit
normal of the plane spanned by k and the detection axis z, and p = k x s.
Circular vectors use the right-handed transverse frame (e1, e2) = (p, k x p),
so that rhc = (e1 + i e2)/sqrt(2).  When k is parallel to z the plane is
undefined and the caller must supply ``frame_hint``, which becomes p.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

DIPOLE_SQ = 0.75
RESONANT_CROSS_SECTION = 6.0 * np.pi
INCIDENCE_ANGLE = np.pi / 6

EX = np.array([1.0, 0.0, 0.0])
EY = np.array([0.0, 1.0, 0.0])
EZ = np.array([0.0, 0.0, 1.0])

PolarizationKind = Literal["s", "p", "rhc", "lhc"]
POLARIZATION_KINDS = ("s", "p", "rhc", "lhc")

_TOL = 1e-12


class DegenerateFrameError(ValueError):
    """Raised when a transverse frame cannot be built without a hint."""


def as_direction(v) -> np.ndarray:
    """Return ``v`` as a float unit 3-vector, normalizing it."""
    v = np.asarray(v, dtype=float).reshape(3)
    n = np.linalg.norm(v)
    if not np.isfinite(n) or n == 0:
        raise ValueError(f"cannot build a direction from {v!r}")
    return v / n


def is_direction(v) -> bool:
    v = np.asarray(v)
    return v.shape == (3,) and np.isrealobj(v) and abs(np.linalg.norm(v) - 1) < _TOL


def is_polarization(e, k) -> bool:
    e = np.asarray(e, dtype=complex)
    return abs(np.linalg.norm(e) - 1) < _TOL and abs(np.dot(e, k)) < _TOL


def scan_direction(angle: float) -> np.ndarray:
    """Unit vector in the y-z plane at ``angle`` from +z (towards +y)."""
    return np.array([0.0, np.sin(angle), np.cos(angle)])


def transverse_frame(k, frame_hint=None) -> tuple[np.ndarray, np.ndarray]:
    """Return the (s, p) pair for propagation direction ``k``."""
    k = as_direction(k)
    n = np.cross(k, EZ)
    norm = np.linalg.norm(n)
    if norm > 1e-9:
        s = n / norm
        p = np.cross(k, s)
        return s, p
    if frame_hint is None:
        raise DegenerateFrameError(
            "direction is parallel to the z axis; pass frame_hint to fix the p vector"
        )
    h = np.asarray(frame_hint, dtype=float)
    h = h - np.dot(h, k) * k
    hn = np.linalg.norm(h)
    if hn < 1e-9:
        raise DegenerateFrameError("frame_hint is parallel to the propagation direction")
    p = h / hn
    s = np.cross(p, k)
    return s, p


def make_polarization(kind: PolarizationKind, k, frame_hint=None) -> np.ndarray:
    """Unit transverse polarization vector of the given kind for direction ``k``."""
    if kind not in POLARIZATION_KINDS:
        raise ValueError(f"unknown polarization kind {kind!r}")
    s, p = transverse_frame(k, frame_hint)
    if kind == "s":
        return s.astype(complex)
    if kind == "p":
        return p.astype(complex)
    # (p, k x p) = (p, -s) is right-handed with k
    e1, e2 = p, -s
    sign = 1.0 if kind == "rhc" else -1.0
    return (e1 + sign * 1j * e2) / np.sqrt(2.0)


@dataclass(frozen=True)
class ScatteringGeometry:
    """Incident and detected modes.

    ``e_out`` of None means no polarization analysis (sum over two
    orthogonal transverse channels).  ``k_out`` of None marks an angular
    scan, where the detection direction is swept in the y-z plane.
    """

    k_in: np.ndarray
    e_in: np.ndarray
    k_out: np.ndarray | None = None
    e_out: np.ndarray | None = None

    def __post_init__(self):
        if not is_direction(self.k_in):
            raise ValueError("k_in must be a unit vector")
        if not is_polarization(self.e_in, self.k_in):
            raise ValueError("e_in must be a unit vector transverse to k_in")
        if self.k_out is not None:
            if not is_direction(self.k_out):
                raise ValueError("k_out must be a unit vector")
            if self.e_out is not None and not is_polarization(self.e_out, self.k_out):
                raise ValueError("e_out must be a unit vector transverse to k_out")

    def with_output(self, k_out, e_out=None) -> "ScatteringGeometry":
        return ScatteringGeometry(self.k_in, self.e_in, k_out, e_out)


def incident_direction(theta: float = INCIDENCE_ANGLE) -> np.ndarray:
    return np.array([0.0, np.sin(theta), np.cos(theta)])


def geometry_for_figure(figure: str = "fig1_3", in_pol: PolarizationKind = "s",
                        out_pol: PolarizationKind | None = None) -> ScatteringGeometry:
    """Canonical experiment geometry.

    ``fig1_3``: detection along +z, probe in the y-z plane at 30 degrees.
    ``fig4``: same probe, detection direction left open for a scan.
    """
    k_in = incident_direction()
    e_in = make_polarization(in_pol, k_in)
    if figure == "fig1_3":
        e_out = None if out_pol is None else make_polarization(out_pol, EZ, frame_hint=EY)
        return ScatteringGeometry(k_in, e_in, EZ.copy(), e_out)
    if figure == "fig4":
        return ScatteringGeometry(k_in, e_in)
    raise ValueError(f"unknown figure geometry {figure!r}")


def output_polarization(kind: PolarizationKind, k_out) -> np.ndarray:
    """Analyzer vector for a detection direction in the y-z scan plane."""
    return make_polarization(kind, k_out, frame_hint=EY)
