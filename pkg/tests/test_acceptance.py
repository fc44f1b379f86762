"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest -v -s tests/test_acceptance.py` to see the per-criterion
lines. The trained-prior criteria share session-scoped checkpoints from
conftest; everything is seeded, so results are identical across reruns.
"""

import time

import numpy as np
import pytest
from scipy import stats as sps

import jax.numpy as jnp

from vesselprior import baselines, bayes, cli, harness, synthgen
from vesselprior.bayes import HmcConfig, four_fiber_posterior, normal_to_uniform
from vesselprior.constitutive import BiaxialStretch, cauchy_stress
from vesselprior.diffnet import (
    dense_apply,
    flat_gradient,
    init_dense,
    input_gradient_fn,
)
from vesselprior.harness import ExperimentConfig, relative_error
from vesselprior.synthgen import ParamRanges, default_base_params, grid_layout


def check(name, ok, detail=""):
    print(f"\n[{'PASS' if ok else 'FAIL'}] {name} - {detail}")
    assert ok, f"{name}: {detail}"


# ---------------------------------------------------------------------------
# Constitutive oracle
# ---------------------------------------------------------------------------

def test_criterion_constitutive_oracle():
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    ranges = ParamRanges.default()
    for _ in range(20):
        p = synthgen.sample_params(ranges, rng)
        st = cauchy_stress(p, BiaxialStretch(1.0, 1.0))
        assert abs(st.sigma_theta) < 1e-10 and abs(st.sigma_z) < 1e-10
    worst = 0.0
    for _ in range(100):
        p = synthgen.sample_params(ranges, rng)
        lam_t, lam_z = rng.uniform(1.05, 1.65, 2)
        st = cauchy_stress(p, BiaxialStretch(lam_t, lam_z))
        h = 1e-6
        from vesselprior.constitutive import strain_energy
        fd_t = lam_t * (strain_energy(p, BiaxialStretch(lam_t + h, lam_z))
                        - strain_energy(p, BiaxialStretch(lam_t - h, lam_z))) / (2 * h)
        fd_z = lam_z * (strain_energy(p, BiaxialStretch(lam_t, lam_z + h))
                        - strain_energy(p, BiaxialStretch(lam_t, lam_z - h))) / (2 * h)
        worst = max(worst,
                    abs(st.sigma_theta - fd_t) / max(abs(fd_t), 1e-12),
                    abs(st.sigma_z - fd_z) / max(abs(fd_z), 1e-12))
    elapsed = time.perf_counter() - t0
    check("constitutive-oracle", worst < 1e-6 and elapsed < 1.0,
          f"max FD rel err {worst:.2e} over 100 draws, {elapsed:.2f}s")


# ---------------------------------------------------------------------------
# Differentiation core (paper-size networks)
# ---------------------------------------------------------------------------

def _directional_fd(loss, params, direction, h):
    import jax
    leaves, treedef = jax.tree_util.tree_flatten(params)
    flat = np.concatenate([np.asarray(l).ravel() for l in leaves])

    def rebuild(vec):
        out, at = [], 0
        for leaf in leaves:
            n = np.asarray(leaf).size
            out.append(jnp.asarray(vec[at:at + n].reshape(np.shape(leaf))))
            at += n
        return treedef.unflatten(out)

    return (float(loss(rebuild(flat + h * direction)))
            - float(loss(rebuild(flat - h * direction)))) / (2 * h)


def test_criterion_differentiation_core():
    t0 = time.perf_counter()
    rng = np.random.default_rng(8)
    worst_param, worst_input, worst_nested = 0.0, 0.0, 0.0
    # parameter gradients at the published sizes (branch / trunk / critic)
    for widths, n_in in (((100, 64, 64, 64, 50), 100),
                         ((2, 64, 64, 64, 50), 2),
                         ((1250, 250, 250, 250, 1), 1250)):
        net = init_dense(widths, rng)
        x = jnp.asarray(rng.standard_normal((4, n_in)))

        def loss(params):
            return jnp.mean(dense_apply(params, x) ** 2)

        flat = flat_gradient(loss, net.pytree())
        for _ in range(3):
            d = rng.standard_normal(flat.size)
            d /= np.linalg.norm(d)
            fd = _directional_fd(loss, net.pytree(), d, h=1e-6)
            worst_param = max(worst_param,
                              abs(flat @ d - fd) / max(abs(fd), 1e-12))
    # input gradients
    net = init_dense([1250, 250, 250, 250, 1], rng)
    from vesselprior.diffnet import forward, grad_input
    x = rng.standard_normal(1250)
    g = grad_input(net, x)
    for idx in rng.integers(0, 1250, size=10):
        e = np.zeros(1250)
        e[idx] = 1e-6
        fd = (forward(net, x + e)[0] - forward(net, x - e)[0]) / 2e-6
        worst_input = max(worst_input, abs(g[idx] - fd) / max(abs(fd), 1e-12))
    # nested: parameter gradient of the input-gradient norm
    small = init_dense([15, 64, 64, 64, 1], rng)
    xs = jnp.asarray(rng.standard_normal(15))
    gfn = input_gradient_fn("tanh", scalar=True)

    def nested_loss(params):
        return jnp.sum(gfn(params, xs) ** 2)

    flat = flat_gradient(nested_loss, small.pytree())
    for _ in range(3):
        d = rng.standard_normal(flat.size)
        d /= np.linalg.norm(d)
        fd = _directional_fd(nested_loss, small.pytree(), d, h=1e-5)
        worst_nested = max(worst_nested, abs(flat @ d - fd) / max(abs(fd), 1e-10))
    elapsed = time.perf_counter() - t0
    check("differentiation-core",
          worst_param < 1e-5 and worst_input < 1e-5 and worst_nested < 1e-4
          and elapsed < 30.0,
          f"param {worst_param:.2e}, input {worst_input:.2e}, "
          f"nested {worst_nested:.2e}, {elapsed:.1f}s")


# ---------------------------------------------------------------------------
# Normal-to-uniform transform
# ---------------------------------------------------------------------------

def test_criterion_uniform_transform():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    x = rng.standard_normal(100_000)
    t = normal_to_uniform(x, 3.0, 7.0)
    d = sps.kstest(t, "uniform", args=(3.0, 4.0)).statistic
    elapsed = time.perf_counter() - t0
    check("uniform-transform", d < 0.006 and elapsed < 5.0,
          f"KS distance {d:.4f} at n=1e5, {elapsed:.2f}s")


# ---------------------------------------------------------------------------
# HMC calibration
# ---------------------------------------------------------------------------

def test_criterion_hmc_calibration():
    t0 = time.perf_counter()

    def logp_and_grad(x):
        return -0.5 * float(x @ x), -x

    cfg = HmcConfig(n_burn=1000, n_draws=5000, n_leapfrog=30)
    out = bayes.hmc_sample(logp_and_grad, np.zeros(2), cfg,
                           np.random.default_rng(2))
    mean = out.samples.mean(axis=0)
    var = out.samples.var(axis=0)
    elapsed = time.perf_counter() - t0
    check("hmc-calibration",
          bool(np.all(np.abs(mean) < 0.05) and np.all(np.abs(var - 1) < 0.10)
               and elapsed < 30.0),
          f"mean {mean.round(4)}, var {var.round(3)}, "
          f"accept {out.accept_rate:.2f}, {elapsed:.1f}s")


# ---------------------------------------------------------------------------
# Model-specific (4FF) inference
# ---------------------------------------------------------------------------

@pytest.mark.slow
def test_criterion_four_fiber_inference():
    t0 = time.perf_counter()
    layout = grid_layout()
    ranges = ParamRanges.default()
    truth = default_base_params()
    truth_field = synthgen.true_field(truth, layout)
    true_concat = np.concatenate([truth_field.sigma_theta, truth_field.sigma_z])
    cfg = HmcConfig(n_draws=1500, n_burn=1500, n_leapfrog=30)
    combined, per_comp = [], []
    for seed in (1, 2, 3):
        rng = np.random.default_rng(seed)
        locs = np.column_stack([rng.uniform(1.4, 1.6, 7),
                                rng.uniform(1.4, 1.6, 7)])
        mset = synthgen.make_measurements(truth, locs, noise_scale=0.1,
                                          seed=seed + 100)
        target = four_fiber_posterior(mset, ranges, eps=0.1)
        draws = bayes.hmc_sample(target.logp_and_grad, np.zeros(9), cfg,
                                 np.random.default_rng(seed + 300))
        push = bayes.four_fiber_field_pusher(ranges, layout.points,
                                             include_energy=False)
        stats = bayes.posterior_stress_stats(draws, push, layout.points)
        pred = np.concatenate([stats.mean_sigma_theta, stats.mean_sigma_z])
        combined.append(relative_error(pred, true_concat))
        per_comp.append((relative_error(stats.mean_sigma_theta,
                                        truth_field.sigma_theta),
                         relative_error(stats.mean_sigma_z,
                                        truth_field.sigma_z)))
    mean_err = float(np.mean(combined))
    elapsed = time.perf_counter() - t0
    check("four-fiber-inference", mean_err <= 0.10 and elapsed < 600.0,
          f"stress-field err {mean_err:.4f} (3-seed mean; per-seed "
          f"theta/z {[(round(a, 3), round(b, 3)) for a, b in per_comp]}), "
          f"{elapsed:.0f}s")


# ---------------------------------------------------------------------------
# Case I desk scale
# ---------------------------------------------------------------------------

@pytest.mark.slow
def test_criterion_case1_desk_scale(prior_1d, tmp_path):
    t0 = time.perf_counter()
    results = []
    for seed in (11, 22, 33, 44, 55):
        cfg = ExperimentConfig(case="case1", seed=seed,
                               out_dir=str(tmp_path / f"s{seed}"),
                               checkpoint=prior_1d.dir,
                               hmc_draws=1500, hmc_burn=1500)
        report = harness.run_case1(cfg)
        gan = report.errors["gan"]["sigma_theta"]
        gp = report.errors["gp"]["sigma_theta"]
        results.append((seed, gan, gp, gan <= 0.10 and gan < gp))
    n_ok = sum(1 for r in results if r[3])
    elapsed = time.perf_counter() - t0
    detail = "; ".join(f"seed {s}: fp {g:.3f} vs gp {p:.3f}"
                       for s, g, p, _ in results)
    check("case1-desk-scale", n_ok >= 4 and elapsed < 7200.0,
          f"{n_ok}/5 seeds pass ({detail}), {elapsed:.0f}s "
          "(prior: N=1000 curves, 25k generator iterations)")


# ---------------------------------------------------------------------------
# Trend reproductions
# ---------------------------------------------------------------------------

@pytest.mark.slow
def test_trend_noise_points_sweep(prior_1d, tmp_path):
    cfg = ExperimentConfig(case="sweep", seed=1,
                           out_dir=str(tmp_path / "sweep"),
                           checkpoint=prior_1d.dir,
                           hmc_draws=800, hmc_burn=800)
    matrix = harness.run_sweep(cfg, noise_levels=(0.2, 0.0),
                               point_counts=(3, 15), seeds=(0, 1, 2))
    worst, best = matrix[0, 0], matrix[1, 1]
    check("trend-sweep-endpoints", best <= worst,
          f"err(15 pts, eps=0) = {best:.4f} <= err(3 pts, eps=0.2) = {worst:.4f}")


@pytest.mark.slow
def test_trend_out_of_distribution(prior_2d_ood, tmp_path):
    mus = (15.0, 20.0, 30.0)
    per_mu = {mu: [] for mu in mus}
    for seed in (0, 1, 2):
        cfg = ExperimentConfig(case="case2-ood", seed=seed,
                               out_dir=str(tmp_path / f"ood{seed}"),
                               checkpoint=prior_2d_ood.dir,
                               mu_range_kpa=(15.0, 20.0),
                               hmc_draws=800, hmc_burn=800)
        report = harness.run_case2(cfg, variant="ood", ood_mu_kpa=mus)
        for mu in mus:
            errs = report.errors["curve"][format(mu, "g")]["gan"]
            per_mu[mu].append(0.5 * (errs["sigma_theta"] + errs["sigma_z"]))
    in_range = float(np.mean(per_mu[15.0] + per_mu[20.0]))
    outside = float(np.mean(per_mu[30.0]))
    check("trend-ood", outside > in_range,
          f"err(mu=30) = {outside:.4f} > in-range mean {in_range:.4f}")


@pytest.mark.slow
def test_trend_training_set_size(prior_2d_small, prior_2d_main, prior_2d_big):
    layout = grid_layout()
    truth = default_base_params()
    truth_field = synthgen.true_field(truth, layout)
    cfg = HmcConfig(n_draws=800, n_burn=800, n_leapfrog=30)
    means = {}
    for label, prior in (("500", prior_2d_small), ("1000", prior_2d_main),
                         ("2000", prior_2d_big)):
        errs = []
        for seed in (0, 1, 2):
            rng = np.random.default_rng(seed)
            locs = np.column_stack([rng.uniform(1.4, 1.6, 7),
                                    rng.uniform(1.4, 1.6, 7)])
            mset = synthgen.make_measurements(truth, locs, noise_scale=0.1,
                                              seed=seed + 100)
            target = bayes.gan_posterior(prior.generator, mset, eps=0.1)
            draws = bayes.hmc_sample(target.logp_and_grad,
                                     np.zeros(target.dim), cfg,
                                     np.random.default_rng(seed + 300))
            stats = bayes.posterior_stress_stats(
                draws, bayes.gan_field_pusher(prior.generator, layout.points),
                layout.points)
            errs.append(relative_error(stats.mean_sigma_theta,
                                       truth_field.sigma_theta))
        means[label] = float(np.mean(errs))
    check("trend-training-set-size", means["2000"] <= means["500"],
          f"sigma_theta err by N: {means}")


@pytest.mark.slow
def test_trend_sampling_regions(prior_2d_main, tmp_path):
    cfg = ExperimentConfig(case="appendix-c", seed=2,
                           out_dir=str(tmp_path / "appc"),
                           checkpoint=prior_2d_main.dir,
                           hmc_draws=800, hmc_burn=800)
    results = harness.run_appendix_c(cfg, meas_seeds=(0, 1, 2))
    by_region = {tuple(r["region"]): 0.5 * (r["err_sigma_theta"]
                                            + r["err_sigma_z"])
                 for r in results}
    whole = by_region[(1.0, 1.65)]
    low = by_region[(1.0, 1.2)]
    check("trend-sampling-regions", whole <= low,
          f"whole-domain err {whole:.4f} <= low-stretch-cluster err {low:.4f} "
          f"(high-stretch: {by_region[(1.4, 1.6)]:.4f})")


@pytest.mark.slow
def test_trend_partial_data_uncertainty(prior_2d_main, tmp_path):
    cfg = ExperimentConfig(case="case2-partial", seed=3,
                           out_dir=str(tmp_path / "partial"),
                           checkpoint=prior_2d_main.dir,
                           hmc_draws=800, hmc_burn=800)
    report = harness.run_case2(cfg, variant="partial")
    sds = report.meta["mean_sd"]
    ok = (sds["gan"]["sigma_z"] > sds["gan"]["sigma_theta"]
          and sds["4ff"]["sigma_z"] > sds["4ff"]["sigma_theta"])
    check("trend-partial-data", ok,
          f"generator SD z/theta = {sds['gan']['sigma_z']:.3f}/"
          f"{sds['gan']['sigma_theta']:.3f}; model-specific = "
          f"{sds['4ff']['sigma_z']:.3f}/{sds['4ff']['sigma_theta']:.3f}")


# ---------------------------------------------------------------------------
# Baseline sanity
# ---------------------------------------------------------------------------

def test_criterion_baseline_sanity():
    # GP interpolation with zero noise (jitter floor only)
    rng = np.random.default_rng(9)
    x = np.linspace(1.0, 1.65, 5)[:, None]
    y = np.exp(1.7 * (x[:, 0] - 1.0)) - 1.0
    model = baselines.GpModel(x_train=x, y_train=y, signal_variance=1.0,
                              length_scales=np.array([0.15]),
                              noise_variance=0.0)
    mean, _ = model.predict(x)
    interp = float(np.max(np.abs(mean - y)))

    # nonlinear fit on dense noiseless data reproduces the field
    truth = default_base_params()
    grid = grid_layout(n=9).points
    mset = synthgen.make_measurements(truth, grid, noise_scale=0.0, seed=10)
    result = baselines.nonlinear_fit(mset, ParamRanges.default().midpoint_params())
    truth_field = synthgen.true_field(truth, grid_layout(n=9))
    fit_field = synthgen.true_field(result.params, grid_layout(n=9))
    fit_err = relative_error(
        np.concatenate([fit_field.sigma_theta, fit_field.sigma_z]),
        np.concatenate([truth_field.sigma_theta, truth_field.sigma_z]))

    # 5 observations vs 9 parameters must refuse
    locs5 = np.column_stack([np.linspace(1.3, 1.6, 5), np.full(5, 1.44)])
    m5 = synthgen.make_measurements(truth, locs5, noise_scale=0.1,
                                    mask=("sigma_theta",), seed=11)
    with pytest.raises(baselines.UnderDeterminedError):
        baselines.nonlinear_fit(m5, truth)
    check("baseline-sanity", interp < 1e-8 and fit_err < 0.01,
          f"GP interpolation {interp:.2e}, fit field err {fit_err:.2e}, "
          "under-determined refusal raised")


# ---------------------------------------------------------------------------
# Reproducibility of CLI experiments
# ---------------------------------------------------------------------------

def _run_cli(args):
    cli.main(args)


@pytest.mark.slow
def test_criterion_cli_reproducibility(tmp_path):
    compared = []
    micro = ["--seed", "5", "--epochs", "30", "--points", "4"]
    for name, extra in (("case1", []), ("case2", ["--variant", "random7"])):
        dirs = []
        for run in ("a", "b"):
            out = tmp_path / f"{name}_{run}"
            args = [name, "--out", str(out)] + micro + extra
            if name == "case2":
                args += ["--noise", "0.1"]
            _run_cli(args)
            dirs.append(out)
        for csv_name in sorted(p.name for p in dirs[0].glob("*.csv")):
            a = (dirs[0] / csv_name).read_bytes()
            b = (dirs[1] / csv_name).read_bytes()
            assert a == b, f"{name}/{csv_name} differs between reruns"
            compared.append(f"{name}/{csv_name}")
    check("cli-reproducibility", len(compared) >= 6,
          f"byte-identical reruns for {len(compared)} CSV outputs")
