import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

import coldscatter.montecarlo as mc
from coldscatter.cloud import CloudSpec
from coldscatter.kernel import CoincidentAtomsError
from coldscatter.montecarlo import (
    Channel,
    ConfigurationFailure,
    EnsembleAverageRequest,
    RunningStats,
    average_spectrum,
    configuration_intensities,
    convergence_report,
)

SMALL = CloudSpec(0.025, 3.0, 9.0)  # N = 32


def _request(**kw):
    base = dict(cloud=SMALL, channels=(Channel("s"), Channel("s", "p")),
                grid=tuple(np.linspace(-4, 2, 7)), n_configs=6, seed=11)
    base.update(kw)
    return EnsembleAverageRequest(**base)


@settings(max_examples=40)
@given(arrays(float, st.tuples(st.integers(2, 40), st.just(3)), elements=st.floats(-1e3, 1e3)))
def test_running_stats_matches_numpy(samples):
    rs = RunningStats(3)
    for row in samples:
        rs.push(row)
    np.testing.assert_allclose(rs.mean, samples.mean(axis=0), rtol=1e-9, atol=1e-9)
    np.testing.assert_allclose(rs.variance, samples.var(axis=0, ddof=1), rtol=1e-7, atol=1e-6)


@settings(max_examples=30)
@given(arrays(float, st.integers(2, 30), elements=st.floats(-100, 100)), st.integers(1, 29))
def test_running_stats_merge(samples, cut):
    cut = min(cut, len(samples) - 1)
    a, b, whole = RunningStats(()), RunningStats(()), RunningStats(())
    for x in samples[:cut]:
        a.push(x)
    for x in samples[cut:]:
        b.push(x)
    for x in samples:
        whole.push(x)
    m = a.merge(b)
    assert m.count == whole.count
    assert m.mean == pytest.approx(whole.mean, rel=1e-9, abs=1e-9)
    assert m.variance == pytest.approx(whole.variance, rel=1e-7, abs=1e-7)


def test_stderr_undefined_for_single_sample():
    rs = RunningStats(2)
    rs.push([1.0, 2.0])
    assert np.all(np.isnan(rs.stderr))


def test_stderr_scales_inverse_sqrt():
    rng = np.random.default_rng(0)
    ratios = []
    for _ in range(200):
        small, large = RunningStats(()), RunningStats(())
        data = rng.exponential(size=400)
        for x in data[:200]:
            small.push(x)
        for x in data:
            large.push(x)
        ratios.append(float(small.stderr**2 / large.stderr**2))
    # doubling M halves stderr^2; the sampling spread of the ratio is ~0.15
    assert np.mean(ratios) == pytest.approx(2.0, abs=3 * np.std(ratios) / np.sqrt(len(ratios)) + 0.02)


def test_single_configuration_mean_is_exact():
    req = _request(n_configs=1)
    res = average_spectrum(req)
    np.testing.assert_array_equal(res.mean, configuration_intensities(req, 0))
    assert np.all(np.isnan(res.stderr))


def test_worker_count_invariance():
    req = _request(n_configs=8)
    serial = average_spectrum(req, workers=1)
    parallel = average_spectrum(req, workers=3)
    assert np.array_equal(serial.mean, parallel.mean)
    assert np.array_equal(serial.stderr, parallel.stderr)


def test_reproducible_and_seed_dependent():
    a = average_spectrum(_request())
    b = average_spectrum(_request())
    c = average_spectrum(_request(seed=12))
    assert np.array_equal(a.mean, b.mean)
    assert not np.array_equal(a.mean, c.mean)


def test_lu_and_eigen_routes_agree():
    eig = average_spectrum(_request(method="eigen", n_configs=3))
    lu = average_spectrum(_request(method="lu", n_configs=3))
    np.testing.assert_allclose(eig.mean, lu.mean, rtol=1e-8)


def test_total_equals_sum_of_channels():
    res = average_spectrum(_request(channels=(Channel("p"), Channel("p", "s"), Channel("p", "p")), n_configs=2))
    np.testing.assert_allclose(res.mean[0], res.mean[1] + res.mean[2], rtol=1e-10)


def test_angular_grid():
    angles = tuple(np.deg2rad(np.arange(-180, 181, 30)))
    res = average_spectrum(_request(grid=angles, grid_kind="angle", method="lu", n_configs=3,
                                    channels=(Channel("rhc", "rhc"), Channel("rhc", "lhc"))))
    assert res.mean.shape == (2, 13)
    assert np.all(res.mean > 0)
    # +-180 degrees is the same direction
    np.testing.assert_allclose(res.mean[:, 0], res.mean[:, -1], rtol=1e-9)


def test_detection_direction_matches_angular_zero():
    spec = average_spectrum(_request(grid=(0.0,), n_configs=2, channels=(Channel("s"),)))
    ang = average_spectrum(_request(grid=(0.0,), grid_kind="angle", method="lu", delta=0.0,
                                    n_configs=2, channels=(Channel("s"),)))
    np.testing.assert_allclose(spec.mean, ang.mean, rtol=1e-10)


def test_retry_on_coincident_atoms(monkeypatch):
    real = mc.sample_configuration
    seen = []

    def flaky(spec, stream):
        seen.append(stream.attempt)
        if stream.attempt == 0:
            raise CoincidentAtomsError("boom")
        return real(spec, stream)

    monkeypatch.setattr(mc, "sample_configuration", flaky)
    configuration_intensities(_request(), 0)
    assert seen == [0, 1]


def test_abort_after_retries(monkeypatch):
    def broken(spec, stream):
        raise CoincidentAtomsError("always")

    monkeypatch.setattr(mc, "sample_configuration", broken)
    with pytest.raises(ConfigurationFailure) as info:
        average_spectrum(_request(seed=99))
    assert info.value.seed == 99 and info.value.index == 0


def test_request_validation():
    with pytest.raises(ValueError):
        _request(n_configs=0)
    with pytest.raises(ValueError):
        _request(grid=())
    with pytest.raises(ValueError):
        _request(grid=(0.0, np.nan))
    with pytest.raises(ValueError):
        _request(method="cholesky")


def test_request_round_trip():
    req = _request(cloud=dataclasses.replace(SMALL, exclusion_radius=0.1))
    assert EnsembleAverageRequest.from_dict(req.to_dict()) == req


def test_manifest_contents():
    res = average_spectrum(_request(n_configs=2))
    m = res.manifest
    assert m["seed"] == 11 and m["n_configs"] == 2 and m["n_atoms"] == 32
    assert "wall_time_s" in m and "code_version" in m
    assert m["request"]["channels"] == ["s_total", "s_p"]


def test_convergence_report():
    res = average_spectrum(_request(n_configs=4))
    rep = convergence_report(res, target_rel=0.01)
    assert rep["max_rel_stderr"] > 0
    assert rep["suggested_n_configs"] >= 4


def test_convergence_report_duplicates_have_zero_error():
    res = mc.SpectrumResult(np.array([0.0]), ("s_total",), np.array([[1.0]]), np.zeros((1, 1)), 2)
    assert convergence_report(res)["max_rel_stderr"] == 0.0
    rs = RunningStats(1)
    rs.push([3.0])
    rs.push([3.0])
    assert rs.stderr[0] == 0.0


def test_convergence_report_preconditions():
    one = mc.SpectrumResult(np.array([0.0]), ("s_total",), np.ones((1, 1)), np.zeros((1, 1)), 1)
    with pytest.raises(ValueError):
        convergence_report(one)
    empty = mc.SpectrumResult(np.array([]), ("s_total",), np.ones((1, 0)), np.zeros((1, 0)), 3)
    with pytest.raises(ValueError):
        convergence_report(empty)


def test_resonant_intensity_positive_with_small_relative_error():
    req = _request(cloud=CloudSpec(0.05, 3.0, 9.0), grid=(0.0,), n_configs=400, channels=(Channel("s"),))
    res = average_spectrum(req)
    assert np.isfinite(res.mean[0, 0]) and res.mean[0, 0] > 0
    assert res.stderr[0, 0] / res.mean[0, 0] < 0.10
