import numpy as np
import pytest

from vesselprior.baselines import (
    FitResult,
    GpModel,
    UnderDeterminedError,
    gp_fit,
    gp_regress,
    nonlinear_fit,
)
from vesselprior.constitutive import BiaxialStretch, cauchy_stress
from vesselprior.synthgen import (
    ParamRanges,
    default_base_params,
    grid_layout,
    make_measurements,
)


def test_gp_interpolates_noiseless_data():
    rng = np.random.default_rng(0)
    x = np.sort(rng.uniform(1.0, 1.65, 8))[:, None]
    y = np.sin(3 * x[:, 0]) + 0.5 * x[:, 0]
    model = GpModel(x_train=x, y_train=y, signal_variance=1.0,
                    length_scales=np.array([0.1]), noise_variance=0.0)
    mean, sd = model.predict(x)
    assert np.max(np.abs(mean - y)) < 1e-8
    assert np.all(sd < 1e-4)


def test_gp_far_query_reverts_to_prior():
    x = np.array([[1.3], [1.4]])
    y = np.array([2.0, 2.5])
    model = GpModel(x_train=x, y_train=y, signal_variance=4.0,
                    length_scales=np.array([0.05]), noise_variance=1e-4)
    mean, sd = model.predict(np.array([[5.0]]))
    assert abs(mean[0]) < 1e-6          # zero prior mean
    assert sd[0] == pytest.approx(2.0, rel=1e-6)  # prior (signal) SD


def test_gp_sd_near_noise_sd_at_training_input():
    # single observation, signal variance >> noise variance
    model = GpModel(x_train=np.array([[1.5]]), y_train=np.array([1.0]),
                    signal_variance=4.0, length_scales=np.array([0.2]),
                    noise_variance=0.01)
    _, sd = model.predict(np.array([[1.5]]))
    assert sd[0] == pytest.approx(0.1, rel=0.01)


def test_gp_mean_linear_in_observations():
    rng = np.random.default_rng(1)
    x = rng.uniform(1.0, 1.6, 6)[:, None]
    y1 = rng.standard_normal(6)
    y2 = rng.standard_normal(6)
    common = dict(signal_variance=1.5, length_scales=np.array([0.25]),
                  noise_variance=0.01)
    q = np.linspace(1.0, 1.65, 11)[:, None]
    m1, _ = GpModel(x_train=x, y_train=y1, **common).predict(q)
    m2, _ = GpModel(x_train=x, y_train=y2, **common).predict(q)
    m12, _ = GpModel(x_train=x, y_train=2 * y1 - 3 * y2, **common).predict(q)
    assert np.allclose(m12, 2 * m1 - 3 * m2, rtol=1e-9)


def test_gp_fit_recovers_reasonable_hyperparameters():
    rng = np.random.default_rng(2)
    x = np.sort(rng.uniform(1.0, 1.65, 40))[:, None]
    y = np.sin(6 * x[:, 0]) + 0.05 * rng.standard_normal(40)
    model = gp_fit(x, y, noise_variance=0.05**2)
    mean, _ = model.predict(x)
    rms = np.sqrt(np.mean((mean - np.sin(6 * x[:, 0])) ** 2))
    assert rms < 0.05
    assert 0.02 < model.length_scales[0] < 1.0


def test_gp_posterior_sd_nonnegative_and_validation():
    with pytest.raises(ValueError):
        GpModel(x_train=np.array([[1.0]]), y_train=np.array([0.0]),
                signal_variance=-1.0, length_scales=np.array([0.1]),
                noise_variance=0.0)
    model = GpModel(x_train=np.array([[1.0], [1.2]]), y_train=np.array([0.0, 1.0]),
                    signal_variance=1.0, length_scales=np.array([0.2]),
                    noise_variance=0.01)
    _, sd = model.predict(np.linspace(0.9, 1.4, 17)[:, None])
    assert np.all(sd >= 0.0)


def test_gp_regress_components_and_1d_inputs():
    truth = default_base_params()
    locs = np.column_stack([np.linspace(1.3, 1.6, 6), np.full(6, 1.44)])
    m = make_measurements(truth, locs, noise_scale=0.0, mask=("sigma_theta",),
                          seed=0)
    out = gp_regress(m, locs, noise_variance=1e-6)
    assert out["sigma_z"] is None
    mean, sd = out["sigma_theta"]
    assert np.max(np.abs(mean - m.sigma_theta)) < 1e-3


def test_nonlinear_fit_underdetermined():
    truth = default_base_params()
    locs = np.column_stack([np.linspace(1.3, 1.6, 5), np.full(5, 1.44)])
    m = make_measurements(truth, locs, noise_scale=0.1, mask=("sigma_theta",),
                          seed=1)
    with pytest.raises(UnderDeterminedError):
        nonlinear_fit(m, truth)
    # 5 points with both components = 10 observations >= 9: allowed
    m2 = make_measurements(truth, locs, noise_scale=0.0, seed=1)
    result = nonlinear_fit(m2, truth)
    assert isinstance(result, FitResult)


def test_nonlinear_fit_recovers_field_from_dense_noiseless_data():
    truth = default_base_params()
    grid = grid_layout(n=9).points
    m = make_measurements(truth, grid, noise_scale=0.0, seed=2)
    init = ParamRanges.default().midpoint_params()
    result = nonlinear_fit(m, init)
    assert result.converged
    fitted = result.params
    true_t = np.array([cauchy_stress(truth, BiaxialStretch(*p)).sigma_theta
                       for p in grid])
    fit_t = np.array([cauchy_stress(fitted, BiaxialStretch(*p)).sigma_theta
                      for p in grid])
    err = np.linalg.norm(fit_t - true_t) / np.linalg.norm(true_t)
    assert err < 0.01


def test_nonlinear_fit_zero_residual_start_terminates_immediately():
    truth = default_base_params()
    grid = grid_layout(n=5).points
    m = make_measurements(truth, grid, noise_scale=0.0, seed=3)
    result = nonlinear_fit(m, truth)
    assert result.residual_norm < 1e-10
    assert result.iterations <= 2


def test_nonlinear_fit_respects_bounds():
    truth = default_base_params()
    grid = grid_layout(n=7).points
    m = make_measurements(truth, grid, noise_scale=0.3, seed=4)
    ranges = ParamRanges.default()
    result = nonlinear_fit(m, ranges.midpoint_params(), ranges=ranges)
    p = result.params
    assert ranges.bounds["mu"][0] / 100 <= p.mu <= ranges.bounds["mu"][1] / 100
    assert ranges.bounds["alpha"][0] <= p.alpha_deg <= ranges.bounds["alpha"][1]
    assert p.k1[2] == p.k1[3] and p.k2[2] == p.k2[3]


def test_nonlinear_fit_weighting_flag():
    truth = default_base_params()
    grid = grid_layout(n=7).points
    m = make_measurements(truth, grid, noise_scale=0.05, seed=5)
    init = ParamRanges.default().midpoint_params()
    r1 = nonlinear_fit(m, init, weighting="none")
    r2 = nonlinear_fit(m, init, weighting="inverse-stress")
    assert r1.converged and r2.converged
    with pytest.raises(ValueError):
        nonlinear_fit(m, init, weighting="quadratic")
