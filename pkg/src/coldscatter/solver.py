"""Resolvent solves and scattering cross sections.

The excitation vector x solves (delta*I - Sigma) x = b, where b carries the
incident polarization and phase at every atom.  The far-field amplitude
in direction k' with analyzer e' is A = d^2 sum_a conj(e') . x_a exp(-i k'.r_a)
and dsigma/dOmega = |A|^2 (k0 = 1, elastic scattering).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np
import scipy.linalg as sla
from scipy.linalg import lapack

from .units import DIPOLE_SQ, ScatteringGeometry, output_polarization, scan_direction, transverse_frame

Method = Literal["lu", "eigen"]
RESIDUAL_TOL = 1e-10


class SolverError(RuntimeError):
    pass


def source_vector(positions, k_in, e_in) -> np.ndarray:
    pos = np.asarray(positions, dtype=float)
    phase = np.exp(1j * pos @ np.asarray(k_in, dtype=float))
    return (phase[:, None] * np.asarray(e_in, dtype=complex)[None, :]).ravel()


def projection_vector(positions, k_out, e_out) -> np.ndarray:
    """Vector u with amplitude A = d^2 * (u @ x)."""
    pos = np.asarray(positions, dtype=float)
    phase = np.exp(-1j * pos @ np.asarray(k_out, dtype=float))
    return (phase[:, None] * np.conj(np.asarray(e_out, dtype=complex))[None, :]).ravel()


def relative_residual(sigma, delta, x, b) -> float:
    r = delta * x - sigma @ x - b
    return float(np.linalg.norm(r) / np.linalg.norm(b))


class ShiftedLU:
    """LU factorization of (delta*I - Sigma) for one detuning."""

    def __init__(self, sigma: np.ndarray, delta: float):
        self.sigma = sigma
        self.delta = float(delta)
        a = -sigma
        a[np.diag_indices_from(a)] += self.delta
        self._anorm = np.abs(a).sum(axis=0).max()
        self.lu, self.piv = sla.lu_factor(a, overwrite_a=True, check_finite=False)
        if np.any(np.diag(self.lu) == 0):
            raise SolverError(f"shifted matrix is singular at delta={delta}")

    def rcond(self) -> float:
        rc, _ = lapack.zgecon(self.lu, self._anorm, norm="1")
        return float(rc)

    def solve(self, b: np.ndarray, tol: float = RESIDUAL_TOL) -> np.ndarray:
        x = sla.lu_solve((self.lu, self.piv), b, check_finite=False)
        if tol is None:
            return x
        for attempt in range(2):
            r = b - (self.delta * x - self.sigma @ x)
            res = np.linalg.norm(r, axis=0) / np.linalg.norm(b, axis=0)
            if np.all(res < tol):
                return x
            if attempt == 0:
                x = x + sla.lu_solve((self.lu, self.piv), r, check_finite=False)
        raise SolverError(
            f"residual {np.max(res):.2e} exceeds {tol:.0e} at delta={self.delta} "
            f"(reciprocal condition estimate {self.rcond():.2e})"
        )


class EigenCache:
    """Sigma = V diag(lam) V^-1, reused for every detuning.

    Amplitudes only need two projections per (source, analyzer) pair:
    A(delta) = d^2 * sum_n w_n c_n / (delta - lam_n), with c = V^-1 b and
    w = V^T u, so a whole spectrum costs O(3N) per detuning.
    """

    def __init__(self, sigma: np.ndarray):
        self.sigma = sigma
        self.eigenvalues, self.vectors = np.linalg.eig(sigma)
        self._vlu = sla.lu_factor(self.vectors, check_finite=False)

    def coefficients(self, b: np.ndarray) -> np.ndarray:
        return sla.lu_solve(self._vlu, b, check_finite=False)

    def left(self, u: np.ndarray) -> np.ndarray:
        return self.vectors.T @ u

    def solve(self, delta: float, b: np.ndarray, tol: float | None = RESIDUAL_TOL) -> np.ndarray:
        c = self.coefficients(b)
        shift = 1.0 / (delta - self.eigenvalues)
        x = self.vectors @ (shift[:, None] * c if c.ndim == 2 else shift * c)
        if tol is not None:
            res = relative_residual(self.sigma, delta, x, b)
            if res >= tol:
                raise SolverError(
                    f"eigen-route residual {res:.2e} exceeds {tol:.0e} at delta={delta}"
                )
        return x

    def amplitudes(self, deltas, w: np.ndarray, c: np.ndarray) -> np.ndarray:
        deltas = np.atleast_1d(np.asarray(deltas, dtype=float))
        wc = w * c
        return DIPOLE_SQ * (wc[None, :] / (deltas[:, None] - self.eigenvalues[None, :])).sum(axis=1)


def solve_excitation(sigma, delta, source, method: Method = "lu", cache: EigenCache | None = None,
                     tol: float | None = RESIDUAL_TOL) -> np.ndarray:
    if not np.isfinite(delta):
        raise ValueError("detuning must be finite")
    if method == "lu":
        return ShiftedLU(sigma, delta).solve(source, tol)
    if method == "eigen":
        cache = cache if cache is not None else EigenCache(sigma)
        return cache.solve(delta, source, tol)
    raise ValueError(f"unknown method {method!r}")


def field_vectors(x, positions, directions) -> np.ndarray:
    """d^2 sum_a x_a exp(-i k.r_a) for each row of ``directions`` -> (n_dir, 3)."""
    pos = np.asarray(positions, dtype=float)
    dirs = np.atleast_2d(directions)
    phases = np.exp(-1j * dirs @ pos.T)
    return DIPOLE_SQ * phases @ np.asarray(x).reshape(len(pos), 3)


def scattering_amplitude(x, positions, k_out, e_out) -> complex:
    v = field_vectors(x, positions, np.asarray(k_out)[None, :])[0]
    return complex(np.dot(np.conj(e_out), v))


def unpolarized_intensity(v, k) -> np.ndarray:
    """Sum over both transverse analyzer channels: |v|^2 - |k.v|^2."""
    v = np.atleast_2d(v)
    k = np.atleast_2d(k)
    return np.sum(np.abs(v) ** 2, axis=-1) - np.abs(np.sum(k * v, axis=-1)) ** 2


@dataclass(frozen=True)
class CrossSectionSample:
    dsigma_domega: float
    delta: float
    geometry: ScatteringGeometry


def differential_cross_section(sigma, positions, geometry: ScatteringGeometry, delta: float,
                               method: Method = "lu", cache: EigenCache | None = None) -> CrossSectionSample:
    if geometry.k_out is None:
        raise ValueError("geometry has no detection direction; use angular_scan")
    b = source_vector(positions, geometry.k_in, geometry.e_in)
    x = solve_excitation(sigma, delta, b, method, cache)
    v = field_vectors(x, positions, geometry.k_out[None, :])[0]
    if geometry.e_out is not None:
        val = abs(np.dot(np.conj(geometry.e_out), v)) ** 2
    else:
        val = unpolarized_intensity(v, geometry.k_out)[0]
    return CrossSectionSample(float(val), float(delta), geometry)


def channel_intensities(v, directions, out_kind) -> np.ndarray:
    """Intensity per direction for analyzer ``out_kind`` (None = no analyzer)."""
    if out_kind is None:
        return unpolarized_intensity(v, directions)
    e = np.array([output_polarization(out_kind, k) for k in directions])
    return np.abs(np.sum(np.conj(e) * v, axis=1)) ** 2


def angular_scan(sigma, positions, k_in, e_in, delta, angles, out_kinds=(None,),
                 method: Method = "lu", cache: EigenCache | None = None) -> np.ndarray:
    """dsigma/dOmega over detection angles in the y-z plane.

    One solve serves every angle.  Returns an array (len(out_kinds), len(angles)).
    """
    b = source_vector(positions, k_in, e_in)
    x = solve_excitation(sigma, delta, b, method, cache)
    dirs = np.array([scan_direction(a) for a in np.atleast_1d(angles)])
    v = field_vectors(x, positions, dirs)
    return np.array([channel_intensities(v, dirs, kind) for kind in out_kinds])


def sphere_quadrature(n_theta: int = 100, n_phi: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre in cos(theta) times uniform phi; returns (directions, weights)."""
    mu, wmu = np.polynomial.legendre.leggauss(n_theta)
    phi = 2 * np.pi * np.arange(n_phi) / n_phi
    st = np.sqrt(1 - mu**2)
    dirs = np.stack([
        np.outer(st, np.cos(phi)).ravel(),
        np.outer(st, np.sin(phi)).ravel(),
        np.repeat(mu, n_phi),
    ], axis=1)
    weights = np.repeat(wmu, n_phi) * (2 * np.pi / n_phi)
    return dirs, weights


def total_cross_section(x, positions, n_theta: int = 100, n_phi: int = 100) -> float:
    """Scattered power integrated over the full sphere, all polarizations."""
    dirs, w = sphere_quadrature(n_theta, n_phi)
    v = field_vectors(x, positions, dirs)
    return float(np.sum(w * unpolarized_intensity(v, dirs)))


def extinction_cross_section(x, positions, k_in, e_in) -> float:
    """Extinction from the forward amplitude (optical theorem)."""
    return float(-4 * np.pi * scattering_amplitude(x, positions, k_in, e_in).imag)


def transverse_basis(k) -> np.ndarray:
    """Two orthonormal analyzer vectors for direction ``k`` (rows)."""
    s, p = transverse_frame(k, frame_hint=np.array([0.0, 1.0, 0.0]))
    return np.array([s, p], dtype=complex)
