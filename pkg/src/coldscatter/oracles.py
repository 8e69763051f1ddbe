"""Closed-form single- and two-atom references."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .units import DIPOLE_SQ, RESONANT_CROSS_SECTION


def single_atom_cross_section(delta):
    """Total scattering cross section of one atom (units 1/k0^2)."""
    return RESONANT_CROSS_SECTION * 0.25 / (np.square(delta) + 0.25)


def single_atom_excitation(delta) -> complex:
    return 1.0 / (delta + 0.5j)


def transverse_coupling(r: float) -> complex:
    return DIPOLE_SQ * np.exp(1j * r) / r**3 * (1 - 1j * r - r * r)


def longitudinal_coupling(r: float) -> complex:
    return -2 * DIPOLE_SQ * np.exp(1j * r) / r**3 * (1 - 1j * r)


@dataclass(frozen=True)
class TwoAtomModes:
    separation: float
    transverse: tuple[complex, complex]
    longitudinal: tuple[complex, complex]

    def all(self) -> np.ndarray:
        """Six eigenvalues; the transverse pair is doubly degenerate."""
        t, l = self.transverse, self.longitudinal
        return np.array([t[0], t[0], t[1], t[1], l[0], l[1]])

    def decay_rates(self) -> np.ndarray:
        return -2 * self.all().imag


def two_atom_eigenvalues(r: float) -> TwoAtomModes:
    if not r > 0:
        raise ValueError("separation must be positive")
    t = transverse_coupling(r)
    l = longitudinal_coupling(r)
    return TwoAtomModes(float(r), (-0.5j + t, -0.5j - t), (-0.5j + l, -0.5j - l))


def match_eigenvalues(expected, found) -> float:
    """Largest distance after greedy nearest matching of two spectra."""
    found = list(np.asarray(found))
    worst = 0.0
    for e in np.asarray(expected):
        i = int(np.argmin([abs(e - f) for f in found]))
        worst = max(worst, abs(e - found.pop(i)))
    return worst
