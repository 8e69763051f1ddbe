"""Self-energy matrix of N motionless J=0 -> J=1 atoms (Cartesian basis).

Row/column index 3*a + mu addresses atom a, excited sublevel mu in (x, y, z).
Diagonal blocks are -i/2 (natural width, Lamb shift absorbed in the
resonance frequency); off-diagonal blocks are the retarded dipole-dipole
exchange kernel.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .units import DIPOLE_SQ

_CHUNK_BYTES = 64 * 2**20


class CoincidentAtomsError(ValueError):
    pass


def pair_block(r) -> np.ndarray:
    """3x3 exchange block for separation vector ``r`` (units 1/k0)."""
    r = np.asarray(r, dtype=float).reshape(3)
    d = np.linalg.norm(r)
    if d == 0:
        raise CoincidentAtomsError("coincident atoms: zero separation")
    u = r / d
    phase = DIPOLE_SQ * np.exp(1j * d) / d**3
    return phase * (
        np.eye(3) * (1 - 1j * d - d * d) - np.outer(u, u) * (3 - 3j * d - d * d)
    )


def build_self_energy(positions) -> np.ndarray:
    """Dense 3N x 3N complex-symmetric self-energy matrix.

    Symmetry is exact: the kernel is even in the separation vector, so the
    (a, b) and (b, a) blocks are computed from bitwise-identical inputs.
    """
    pos = np.ascontiguousarray(positions, dtype=float)
    n = len(pos)
    if n < 1:
        raise ValueError("need at least one atom")
    sigma = np.zeros((3 * n, 3 * n), dtype=complex)
    s4 = sigma.reshape(n, 3, n, 3)
    eye = np.eye(3)
    chunk = max(1, _CHUNK_BYTES // (n * 9 * 16))

    for a0 in range(0, n, chunk):
        a1 = min(n, a0 + chunk)
        diff = pos[a0:a1, None, :] - pos[None, :, :]
        dist = np.sqrt(diff[..., 0] ** 2 + diff[..., 1] ** 2 + diff[..., 2] ** 2)
        rows = np.arange(a0, a1)
        dist[rows - a0, rows] = 1.0
        if np.any(dist == 0):
            a, b = np.argwhere(dist == 0)[0]
            raise CoincidentAtomsError(f"coincident atoms {a0 + a} and {b}")
        phase = DIPOLE_SQ * np.exp(1j * dist) / dist**3
        iso = phase * (1 - 1j * dist - dist**2)
        lon = phase * (3 - 3j * dist - dist**2) / dist**2
        block = iso[..., None, None] * eye - lon[..., None, None] * (
            diff[..., :, None] * diff[..., None, :]
        )
        block[rows - a0, rows] = -0.5j * eye
        s4[a0:a1] = block.transpose(0, 2, 1, 3)

    tr = np.trace(sigma).imag
    if tr != -1.5 * n:
        raise AssertionError(f"trace rule violated: Im tr = {tr}, expected {-1.5 * n}")
    return sigma


def spherical_vectors() -> np.ndarray:
    """Columns are the spherical unit vectors e_{-1}, e_0, e_{+1}."""
    s = 1 / np.sqrt(2)
    return np.array([
        [s, 0, -s],
        [-1j * s, 0, -1j * s],
        [0, 1, 0],
    ], dtype=complex)


def build_self_energy_spherical(positions) -> np.ndarray:
    """Self-energy with the excited sublevels labelled by m = -1, 0, +1.

    Each element is summed directly from dipole matrix elements
    <e_m|d_mu|g> = d conj(e_m)_mu; used to cross-check the Cartesian build.
    """
    pos = np.asarray(positions, dtype=float)
    n = len(pos)
    u = spherical_vectors()
    sigma = np.zeros((3 * n, 3 * n), dtype=complex)
    for a in range(n):
        sigma[3 * a:3 * a + 3, 3 * a:3 * a + 3] = -0.5j * np.eye(3)
        for b in range(n):
            if a == b:
                continue
            g = pair_block(pos[a] - pos[b]) / DIPOLE_SQ
            blk = np.empty((3, 3), dtype=complex)
            for m in range(3):
                for mp in range(3):
                    blk[m, mp] = DIPOLE_SQ * np.sum(
                        np.conj(u[:, m])[:, None] * g * u[:, mp][None, :]
                    )
            sigma[3 * a:3 * a + 3, 3 * b:3 * b + 3] = blk
    return sigma


def spherical_to_cartesian(sigma_sph: np.ndarray) -> np.ndarray:
    n = sigma_sph.shape[0] // 3
    big = np.kron(np.eye(n), spherical_vectors())
    return big @ sigma_sph @ big.conj().T


def dump_matrix(path, sigma: np.ndarray) -> None:
    """Write ``uint64 dim`` followed by row-major little-endian complex128."""
    sigma = np.asarray(sigma)
    with open(Path(path), "wb") as fh:
        fh.write(np.uint64(sigma.shape[0]).astype("<u8").tobytes())
        fh.write(np.ascontiguousarray(sigma, dtype="<c16").tobytes())


def load_matrix(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    dim = int(np.frombuffer(raw[:8], dtype="<u8")[0])
    data = np.frombuffer(raw[8:], dtype="<c16")
    if data.size != dim * dim:
        raise ValueError(f"{path}: header says {dim}x{dim}, found {data.size} entries")
    return data.reshape(dim, dim).astype(complex)
