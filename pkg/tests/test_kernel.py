import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from coldscatter.kernel import (
    CoincidentAtomsError,
    build_self_energy,
    build_self_energy_spherical,
    dump_matrix,
    load_matrix,
    pair_block,
    spherical_to_cartesian,
)

from conftest import random_cloud

# Independent evaluation at k0 r = 1 with d^2 = 3/4:
# transverse (3/4) e^{i} (1 - i - 1) = (3/4)(sin 1 - i cos 1)
SXX = 0.75 * math.sin(1) - 0.75j * math.cos(1)
# longitudinal -(3/2) e^{i} (1 - i)
SZZ = -1.5 * complex(math.cos(1), math.sin(1)) * complex(1, -1)


def test_pair_block_on_axis():
    blk = pair_block([0, 0, 1])
    assert blk[0, 0] == pytest.approx(SXX, abs=1e-15)
    assert blk[1, 1] == pytest.approx(SXX, abs=1e-15)
    assert blk[2, 2] == pytest.approx(SZZ, abs=1e-15)
    assert SXX == pytest.approx(0.6312 - 0.4053j, abs=2e-4)
    assert SZZ == pytest.approx(-2.0727 - 0.4518j, abs=1e-4)
    assert blk[0, 1] == 0 and blk[0, 2] == 0 and blk[1, 2] == 0


def test_pair_block_coincident():
    with pytest.raises(CoincidentAtomsError):
        pair_block([0, 0, 0])


def test_far_field_amplitude():
    assert abs(pair_block([0, 0, 100])[0, 0]) * 100 == pytest.approx(0.75, abs=1e-3)
    assert 0.7 <= abs(pair_block([0, 0, 100])[0, 0]) * 100 <= 0.8


def test_near_field_static_dipole():
    r = 1e-3
    zz = pair_block([0, 0, r])[2, 2]
    lead = -1.5 / r**3
    assert abs(zz - lead) / abs(lead) < 1e-4
    assert abs(zz.real) > 1e3 * abs(zz.imag)


@given(arrays(float, 3, elements=st.floats(-20, 20)).filter(lambda v: np.linalg.norm(v) > 1e-3))
def test_pair_block_even_and_symmetric(r):
    blk = pair_block(r)
    np.testing.assert_array_equal(blk, blk.T)
    np.testing.assert_allclose(pair_block(-r), blk, rtol=1e-14, atol=0)


def test_single_atom_matrix():
    np.testing.assert_array_equal(build_self_energy(np.zeros((1, 3))), -0.5j * np.eye(3))


def test_two_atom_assembly():
    s = build_self_energy(np.array([[0, 0, 0], [0, 0, 1.0]]))
    np.testing.assert_array_equal(s[:3, :3], -0.5j * np.eye(3))
    np.testing.assert_allclose(s[:3, 3:], np.diag([SXX, SXX, SZZ]), atol=1e-15)
    np.testing.assert_array_equal(s[3:, :3], s[:3, 3:])


def test_build_matches_pair_blocks(rng):
    pos = random_cloud(rng, 6)
    s = build_self_energy(pos)
    for a in range(6):
        for b in range(6):
            if a != b:
                np.testing.assert_allclose(s[3 * a:3 * a + 3, 3 * b:3 * b + 3],
                                           pair_block(pos[a] - pos[b]), rtol=1e-13, atol=1e-15)


def test_chunked_build_matches(rng, monkeypatch):
    import coldscatter.kernel as k
    pos = random_cloud(rng, 40)
    full = build_self_energy(pos)
    monkeypatch.setattr(k, "_CHUNK_BYTES", 1)
    np.testing.assert_array_equal(k.build_self_energy(pos), full)


def test_coincident_atoms_rejected():
    with pytest.raises(CoincidentAtomsError):
        build_self_energy(np.array([[0, 0, 0], [1, 1, 1], [0, 0, 0]], dtype=float))


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 8), st.floats(0.2, 5.0), st.integers(0, 2**32 - 1))
def test_matrix_invariants(n, scale, seed):
    pos = np.random.default_rng(seed).normal(size=(n, 3)) * scale
    s = build_self_energy(pos)
    assert np.abs(s - s.T).max() == 0
    assert np.trace(s).imag == -1.5 * n
    assert np.linalg.eigvals(s).imag.max() <= 1e-10


def test_spherical_basis_equivalence(rng):
    pos = random_cloud(rng, 5)
    sph = build_self_energy_spherical(pos)
    np.testing.assert_allclose(spherical_to_cartesian(sph), build_self_energy(pos), atol=1e-12, rtol=0)
    # diagonal blocks stay -i/2 in any orthonormal sublevel basis
    np.testing.assert_allclose(sph[:3, :3], -0.5j * np.eye(3), atol=1e-15)


def test_binary_dump_round_trip(tmp_path, rng):
    s = build_self_energy(random_cloud(rng, 4))
    dump_matrix(tmp_path / "s.bin", s)
    raw = (tmp_path / "s.bin").read_bytes()
    assert len(raw) == 8 + 16 * 12 * 12
    assert int.from_bytes(raw[:8], "little") == 12
    np.testing.assert_array_equal(load_matrix(tmp_path / "s.bin"), s)
