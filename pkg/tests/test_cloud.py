import numpy as np
import pytest
from scipy import integrate

from coldscatter.cloud import (
    CloudSpec,
    EmptyCloudError,
    RandomStreamId,
    SamplingError,
    detuned_optical_depth,
    load_xyz,
    min_pair_distance,
    peak_density_from_N,
    resonant_optical_depth,
    sample_configuration,
    save_xyz,
)


def _quadrature_atom_number(rho0, r_tr, r_l):
    def n(x, y, z):
        return rho0 * np.exp(-(x * x + z * z) / (2 * r_tr**2) - y * y / (2 * r_l**2))

    lim_t, lim_l = 12 * r_tr, 12 * r_l
    val, _ = integrate.tplquad(n, -lim_t, lim_t, -lim_l, lim_l, -lim_t, lim_t, epsrel=1e-10)
    return val


def test_atom_number_matches_quadrature():
    mean = _quadrature_atom_number(0.025, 10, 30)
    assert mean == pytest.approx(1181.2, abs=0.05)
    spec = CloudSpec(0.025, 10, 30)
    assert spec.atom_count == round(mean) == 1181
    assert sample_configuration(spec, RandomStreamId(0)).n_atoms == 1181


def test_fixed_atom_number():
    spec = CloudSpec(0.05, 12, 60, n_atoms=6800)
    assert sample_configuration(spec, RandomStreamId(3)).n_atoms == 6800


def test_empty_cloud():
    with pytest.raises(EmptyCloudError):
        sample_configuration(CloudSpec(0.0, 10, 30), RandomStreamId(0))


@pytest.mark.parametrize("bad", [dict(rho0=-1, r_tr=1, r_l=1), dict(rho0=1, r_tr=0, r_l=1),
                                 dict(rho0=1, r_tr=1, r_l=-2)])
def test_invalid_spec(bad):
    with pytest.raises(ValueError):
        CloudSpec(**bad)


def test_peak_density_inverse():
    assert peak_density_from_N(1181, 10, 30) == pytest.approx(0.025, abs=0.025 / 1181)
    assert peak_density_from_N(6800, 12, 60) == pytest.approx(0.05, rel=2e-3)
    with pytest.raises(ValueError):
        peak_density_from_N(0, 10, 30)


@pytest.mark.parametrize("n", [1, 7, 148, 1181, 2041, 6800])
def test_round_trip_density_and_count(n):
    rho = peak_density_from_N(n, 7.0, 21.0)
    assert CloudSpec(rho, 7.0, 21.0).atom_count == n


def test_resonant_optical_depth():
    assert resonant_optical_depth(CloudSpec(0.1, 10, 30)) == pytest.approx(47.2, abs=0.05)
    assert resonant_optical_depth(CloudSpec(0.1, 12, 36)) == pytest.approx(56.7, abs=0.05)
    assert resonant_optical_depth(CloudSpec(0.0, 12, 36)) == 0.0


def test_optical_depth_matches_line_integral():
    spec = CloudSpec(0.05, 8, 24)
    column, _ = integrate.quad(lambda z: spec.rho0 * np.exp(-z * z / (2 * spec.r_tr**2)), -np.inf, np.inf)
    assert resonant_optical_depth(spec) == pytest.approx(column * 6 * np.pi, rel=1e-10)


def test_detuned_optical_depth():
    assert detuned_optical_depth(47.2, 0) == 47.2
    assert detuned_optical_depth(47.2, 0.5) == pytest.approx(23.6)
    b0 = 1e4
    assert detuned_optical_depth(b0, np.sqrt(b0) / 2) == pytest.approx(1.0, rel=1e-3)
    with pytest.raises(ValueError):
        detuned_optical_depth(-1.0, 0)


def test_sample_moments():
    spec = CloudSpec(0.0, 4.0, 11.0, n_atoms=40000)
    pos = sample_configuration(spec, RandomStreamId(7)).positions
    for axis, r in zip(range(3), spec.radii):
        x = pos[:, axis]
        assert abs(x.mean()) < 3 * r / np.sqrt(len(x))
        assert abs(x.var() / r**2 - 1) < 0.05


def test_determinism_and_substreams():
    spec = CloudSpec(0.025, 5, 15)
    a = sample_configuration(spec, RandomStreamId(42, 3)).positions
    b = sample_configuration(spec, RandomStreamId(42, 3)).positions
    c = sample_configuration(spec, RandomStreamId(42, 4)).positions
    d = sample_configuration(spec, RandomStreamId(42, 3, attempt=1)).positions
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert not np.array_equal(a, d)


def test_exclusion_radius():
    spec = CloudSpec(0.3, 3, 3, exclusion_radius=0.5)
    pos = sample_configuration(spec, RandomStreamId(1)).positions
    assert len(pos) == spec.atom_count
    assert min_pair_distance(pos) >= 0.5


def test_exclusion_radius_impossible():
    spec = CloudSpec(0.0, 0.5, 0.5, n_atoms=500, exclusion_radius=2.0)
    with pytest.raises(SamplingError, match="exclusion radius"):
        sample_configuration(spec, RandomStreamId(1))


def test_xyz_round_trip(tmp_path):
    pos = sample_configuration(CloudSpec(0.025, 5, 15), RandomStreamId(9)).positions
    save_xyz(tmp_path / "c.xyz", pos)
    assert np.array_equal(load_xyz(tmp_path / "c.xyz").positions, pos)
