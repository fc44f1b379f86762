import numpy as np
import pytest

from vesselprior import io
from vesselprior.constitutive import BiaxialStretch, cauchy_stress
from vesselprior.synthgen import (
    BASE_VALUES_KPA,
    MeasurementCsvError,
    MeasurementSet,
    ParamRanges,
    default_base_params,
    generate_dataset,
    grid_layout,
    line_layout,
    make_measurements,
    params_from_row,
    read_measurement_csv,
    representation_for,
    sample_params,
    write_measurement_csv,
    PriorDataset,
)


def test_default_ranges_are_base_times_variation():
    r = ParamRanges.default()
    assert r.bounds["mu"] == pytest.approx((0.8633, 43.165))
    assert r.bounds["k2_axial"] == pytest.approx((0.00137, 0.274))
    assert r.bounds["alpha"] == pytest.approx((2.8, 56.0))


def test_range_override_and_validation():
    r = ParamRanges.default(mu=(15.0, 20.0))
    assert r.bounds["mu"] == (15.0, 20.0)
    with pytest.raises(ValueError):
        ParamRanges.default(mu=(5.0, 5.0))
    with pytest.raises(ValueError):
        ParamRanges.default(bogus=(0.0, 1.0))


def test_sample_params_collapsed_ranges():
    eps = 1e-9
    bounds = {k: (v, v * (1 + eps)) for k, v in BASE_VALUES_KPA.items()}
    p = sample_params(ParamRanges(bounds=bounds), np.random.default_rng(0))
    base = default_base_params()
    assert p.mu == pytest.approx(base.mu, rel=1e-6)
    assert p.alpha_deg == pytest.approx(base.alpha_deg, rel=1e-6)
    assert np.allclose(p.k1, base.k1, rtol=1e-6)


def test_sample_params_mean_matches_uniform_law():
    # mean of U(0.1 b, 5 b) = 2.55 b
    rng = np.random.default_rng(123)
    r = ParamRanges.default()
    mus = np.array([sample_params(r, rng).mu for _ in range(100_000)])
    expected = 2.55 * BASE_VALUES_KPA["mu"] / 100.0  # internal units
    assert abs(mus.mean() - expected) / expected < 0.01


def test_sample_params_determinism_and_tie():
    r = ParamRanges.default()
    p1 = sample_params(r, np.random.default_rng(7))
    p2 = sample_params(r, np.random.default_rng(7))
    assert p1.mu == p2.mu and np.all(p1.k1 == p2.k1) and p1.alpha_deg == p2.alpha_deg
    assert p1.k1[2] == p1.k1[3] and p1.k2[2] == p1.k2[3]


def test_layouts():
    line = line_layout()
    assert line.n_points == 15 and line.representation_length == 15
    assert np.all(line.points[:, 1] == 1.44)
    assert line.points[0, 0] == 1.0 and line.points[-1, 0] == 1.65
    assert line.trunk_inputs().shape == (15, 1)
    grid = grid_layout()
    assert grid.n_points == 625 and grid.representation_length == 1250
    assert grid.grid_shape == (25, 25)
    assert grid.trunk_inputs().shape == (625, 2)


def test_dataset_single_sample_collapsed_ranges_equals_base_field():
    eps = 1e-12
    bounds = {k: (v, v * (1 + eps)) for k, v in BASE_VALUES_KPA.items()}
    layout = line_layout()
    ds = generate_dataset(ParamRanges(bounds=bounds), layout, 1, seed=3)
    base = default_base_params()
    expected = [cauchy_stress(base, BiaxialStretch(lt, lz)).sigma_theta
                for lt, lz in layout.points]
    assert np.allclose(ds.samples[0], expected, rtol=1e-9)


def test_dataset_cap_zero_and_cap_bound():
    layout = line_layout()
    ds0 = generate_dataset(ParamRanges.default(), layout, 5, cap=0.0, seed=0)
    assert np.all(ds0.samples == 0.0)
    ds = generate_dataset(ParamRanges.default(), layout, 200, cap=5.0, seed=0)
    assert np.all(ds.samples <= 5.0)


def test_dataset_cap_idempotent():
    layout = line_layout()
    ds = generate_dataset(ParamRanges.default(), layout, 50, cap=2.0, seed=1)
    assert np.array_equal(np.minimum(ds.samples, 2.0), ds.samples)


def test_dataset_rows_reproducible_from_recorded_draws():
    layout = grid_layout(n=5)
    ds = generate_dataset(ParamRanges.default(), layout, 20, seed=11)
    for i in (0, 7, 19):
        params = params_from_row(ds.param_rows[i])
        assert np.allclose(ds.samples[i], representation_for(params, layout),
                           rtol=1e-12)


def test_dataset_bytes_reproducible(tmp_path):
    layout = line_layout()
    a, b = tmp_path / "a.bin", tmp_path / "b.bin"
    generate_dataset(ParamRanges.default(), layout, 30, seed=5).save(a)
    generate_dataset(ParamRanges.default(), layout, 30, seed=5).save(b)
    assert a.read_bytes() == b.read_bytes()
    other = generate_dataset(ParamRanges.default(), layout, 30, seed=6)
    other.save(b)
    assert a.read_bytes() != b.read_bytes()


def test_dataset_prefix_nesting():
    # sample i depends only on (seed, i): smaller datasets are prefixes
    layout = line_layout()
    small = generate_dataset(ParamRanges.default(), layout, 10, seed=9)
    big = generate_dataset(ParamRanges.default(), layout, 25, seed=9)
    assert np.array_equal(small.samples, big.samples[:10])


def test_dataset_roundtrip_and_checksum(tmp_path):
    path = tmp_path / "ds.bin"
    ds = generate_dataset(ParamRanges.default(), line_layout(), 8, cap=5.0, seed=2)
    ds.save(path)
    loaded = PriorDataset.load(path)
    assert np.array_equal(loaded.samples, ds.samples)
    assert loaded.cap == 5.0 and loaded.seed == 2
    assert loaded.layout.kind == ds.layout.kind
    blob = bytearray(path.read_bytes())
    blob[-3] ^= 0xFF
    path.write_bytes(bytes(blob))
    with pytest.raises(io.ChecksumError):
        PriorDataset.load(path)


def test_measurements_noiseless_equal_truth():
    p = default_base_params()
    locs = np.array([[1.3, 1.44], [1.5, 1.44]])
    m = make_measurements(p, locs, noise_scale=0.0, seed=0)
    for i, (lt, lz) in enumerate(locs):
        st = cauchy_stress(p, BiaxialStretch(lt, lz))
        assert m.sigma_theta[i] == pytest.approx(st.sigma_theta)
        assert m.sigma_z[i] == pytest.approx(st.sigma_z)


def test_measurement_noise_scale_monte_carlo():
    p = default_base_params()
    loc = np.array([[1.5, 1.44]])
    truth = cauchy_stress(p, BiaxialStretch(1.5, 1.44)).sigma_theta
    res = np.array([
        make_measurements(p, loc, noise_scale=0.1, seed=s).sigma_theta[0] - truth
        for s in range(10_000)])
    assert abs(res.std() - 0.1) / 0.1 < 0.03


def test_measurement_mask():
    p = default_base_params()
    locs = np.array([[1.3, 1.44], [1.5, 1.44]])
    m = make_measurements(p, locs, noise_scale=0.1, mask=("sigma_theta",), seed=1)
    assert np.all(np.isnan(m.sigma_z)) and not np.any(np.isnan(m.sigma_theta))
    with pytest.raises(ValueError):
        make_measurements(p, locs, mask=())
    with pytest.raises(ValueError):
        make_measurements(p, np.empty((0, 2)))


def test_measurement_set_requires_one_component_per_point():
    with pytest.raises(ValueError):
        MeasurementSet(lambda_theta=[1.2], lambda_z=[1.3],
                       sigma_theta=[np.nan], sigma_z=[np.nan])


def test_measurement_csv_roundtrip(tmp_path):
    p = default_base_params()
    locs = np.array([[1.31, 1.44], [1.52, 1.44], [1.6, 1.44]])
    m = make_measurements(p, locs, noise_scale=0.1, mask=("sigma_theta",), seed=4)
    path = tmp_path / "m.csv"
    write_measurement_csv(path, m)
    back = read_measurement_csv(path, noise_scale=0.1)
    assert np.allclose(back.lambda_theta, m.lambda_theta)
    assert np.allclose(back.sigma_theta, m.sigma_theta)
    assert np.all(np.isnan(back.sigma_z))


def test_measurement_csv_errors(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("")
    with pytest.raises(MeasurementCsvError, match="empty"):
        read_measurement_csv(path)
    path.write_text("lambda_theta,lambda_z,sigma_theta,sigma_z\n")
    with pytest.raises(MeasurementCsvError, match="no measurement rows"):
        read_measurement_csv(path)
    path.write_text("lambda_theta,lambda_z,sigma_theta,sigma_z\n1.2,1.3,xx,0.5\n")
    with pytest.raises(MeasurementCsvError, match="line 2"):
        read_measurement_csv(path)
    path.write_text("lambda_theta,lambda_z,sigma_theta,sigma_z\n1.2,1.3,,\n")
    with pytest.raises(MeasurementCsvError, match="line 2"):
        read_measurement_csv(path)
    path.write_text("wrong,header\n1,2\n")
    with pytest.raises(MeasurementCsvError, match="header"):
        read_measurement_csv(path)
