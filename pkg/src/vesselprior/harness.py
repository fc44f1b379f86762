"""Experiment orchestration: synthetic studies, baselines, error reports.

Every experiment is a pure function of its configuration and seed: datasets,
training, measurement draws, and chains all derive their randomness from the
config seed, and every emitted CSV/JSON is written with fixed float
formatting, so reruns are byte-identical. Paired comparisons (generator-based
versus model-specific inference, prior-informed versus GP) always share one
measurement set.
"""

from __future__ import annotations

import json
import os
import warnings
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import baselines, bayes, funcprior, io, synthgen
from .bayes import HmcConfig
from .constitutive import FourFiberParams
from .funcprior import GanConfig
from .synthgen import (
    DEFAULT_LAMBDA_Z,
    DOMAIN,
    MeasurementSet,
    ParamRanges,
    SensorLayout,
    default_base_params,
    grid_layout,
    line_layout,
)

# Likelihood scale floor used when measurements are noiseless.
NOISELESS_EPS_FLOOR = 0.05

# Sub-seed offsets so one experiment seed drives independent streams.
_SEED_DATA, _SEED_TRAIN, _SEED_MEAS, _SEED_CHAIN, _SEED_GP = 0, 1, 2, 3, 4


def _subseed(seed: int, offset: int) -> int:
    return int(seed) * 10 + offset


# ---------------------------------------------------------------------------
# Config and error report
# ---------------------------------------------------------------------------

@dataclass
class ExperimentConfig:
    """Resolved settings for one experiment run.

    ``region`` bounds the measurement locations: ((lo, hi),) uses the
    interval for lambda_theta (1d cases), ((lo, hi), (lo, hi)) bounds both
    stretches. ``mu_range_kpa`` overrides the shear-modulus sampling range
    (the out-of-distribution study). ``gan_epochs=None`` picks the per-case
    desk-scale default, and ``paper_scale`` restores the full 100,000-epoch
    setting.
    """

    case: str = "case1"
    seed: int = 0
    out_dir: str = "runs/case1"
    paper_scale: bool = False
    n_train: int = 1000
    gan_epochs: int | None = None
    n_critic: int = 5
    batch_size: int = 50
    latent_dim: int | None = None
    cap: float | None = None
    mu_range_kpa: tuple | None = None
    n_points: int = 5
    noise: float = 0.1
    region: tuple = ((1.3, 1.6),)
    mask: tuple = ("sigma_theta", "sigma_z")
    likelihood_eps: float | None = None
    hmc_draws: int = 1000
    hmc_burn: int = 1000
    hmc_leapfrog: int = 30
    use_nuts: bool = False
    checkpoint: str | None = None

    def resolved_eps(self) -> float:
        if self.likelihood_eps is not None:
            return self.likelihood_eps
        return max(self.noise, NOISELESS_EPS_FLOOR)

    def resolved_epochs(self, default_desk: int) -> int:
        if self.paper_scale:
            return 100000
        return self.gan_epochs if self.gan_epochs is not None else default_desk

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True, default=list)

    @classmethod
    def from_json_file(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            raw = json.load(fh)
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        if "region" in raw:
            raw["region"] = tuple(tuple(r) for r in raw["region"])
        if "mask" in raw:
            raw["mask"] = tuple(raw["mask"])
        if "mu_range_kpa" in raw and raw["mu_range_kpa"] is not None:
            raw["mu_range_kpa"] = tuple(raw["mu_range_kpa"])
        return cls(**raw)


@dataclass
class ErrorReport:
    """Per-method, per-component relative errors plus run metadata."""

    case: str
    seed: int
    errors: dict
    meta: dict = field(default_factory=dict)

    def to_json(self) -> str:
        payload = {"case": self.case, "seed": self.seed,
                   "errors": self.errors, "meta": self.meta}
        return json.dumps(payload, indent=2, sort_keys=True)


def relative_error(pred, true) -> float:
    """L2 norm of (pred - true) over the evaluation grid divided by the L2
    norm of the truth."""
    pred = np.asarray(pred, dtype=float).ravel()
    true = np.asarray(true, dtype=float).ravel()
    if pred.shape != true.shape:
        raise ValueError("prediction and truth shapes differ")
    denom = float(np.linalg.norm(true))
    if denom == 0.0:
        raise ValueError("truth field has zero norm")
    return float(np.linalg.norm(pred - true) / denom)


# ---------------------------------------------------------------------------
# Shared pieces
# ---------------------------------------------------------------------------

def _write(path, text: str) -> None:
    io.atomic_write_text(path, text)


def _ranges(cfg: ExperimentConfig) -> ParamRanges:
    if cfg.mu_range_kpa is not None:
        return ParamRanges.default(mu=cfg.mu_range_kpa)
    return ParamRanges.default()


def _hmc_config(cfg: ExperimentConfig) -> HmcConfig:
    return HmcConfig(n_draws=cfg.hmc_draws, n_burn=cfg.hmc_burn,
                     n_leapfrog=cfg.hmc_leapfrog, use_nuts=cfg.use_nuts)


def _train_or_load_prior(cfg: ExperimentConfig, layout: SensorLayout,
                         desk_epochs: int, out_dir: str,
                         progress: bool = False):
    """Load the prior from cfg.checkpoint, or generate data and train one;
    either way the generator lands in <out_dir>/prior."""
    if cfg.checkpoint:
        gen, disc, manifest = funcprior.load_prior(cfg.checkpoint)
        return gen, manifest
    dataset = synthgen.generate_dataset(
        _ranges(cfg), layout, cfg.n_train, cap=cfg.cap,
        seed=_subseed(cfg.seed, _SEED_DATA))
    dataset_path = os.path.join(out_dir, "dataset.bin")
    dataset.save(dataset_path)
    gcfg = GanConfig(epochs=cfg.resolved_epochs(desk_epochs),
                     n_critic=cfg.n_critic, batch_size=cfg.batch_size,
                     latent_dim=cfg.latent_dim,
                     seed=_subseed(cfg.seed, _SEED_TRAIN))
    trained = funcprior.train(dataset, gcfg, progress=progress)
    prior_dir = os.path.join(out_dir, "prior")
    funcprior.save_prior(prior_dir, trained,
                         dataset_checksum=io.file_sha256(dataset_path))
    gen, _, manifest = funcprior.load_prior(prior_dir)
    return gen, manifest


def _truth_params(ranges: ParamRanges, which: str = "base",
                  mu_kpa: float | None = None) -> FourFiberParams:
    """Ground-truth parameter choice: reference base values, range midpoints,
    or base values with an explicit shear modulus (OOD sweep)."""
    if which == "midpoint":
        return ranges.midpoint_params()
    params = default_base_params()
    if mu_kpa is not None:
        params = FourFiberParams(mu=mu_kpa / synthgen.KPA_PER_UNIT,
                                 k1=params.k1, k2=params.k2,
                                 alpha_deg=params.alpha_deg)
    return params


def _draw_locations(cfg: ExperimentConfig, rng: np.random.Generator) -> np.ndarray:
    """Measurement locations per the config region (random uniform)."""
    if len(cfg.region) == 1:
        lo, hi = cfg.region[0]
        lam_t = rng.uniform(lo, hi, size=cfg.n_points)
        lam_z = np.full(cfg.n_points, DEFAULT_LAMBDA_Z)
    else:
        (tlo, thi), (zlo, zhi) = cfg.region
        lam_t = rng.uniform(tlo, thi, size=cfg.n_points)
        lam_z = rng.uniform(zlo, zhi, size=cfg.n_points)
    return np.column_stack([lam_t, lam_z])


def _gan_inference(gen, mset: MeasurementSet, eps: float, hmc_cfg: HmcConfig,
                   grid, chain_seed: int):
    target = bayes.gan_posterior(gen, mset, eps)
    draws = bayes.hmc_sample(target.logp_and_grad, np.zeros(target.dim),
                             hmc_cfg, np.random.default_rng(chain_seed))
    stats = bayes.posterior_stress_stats(draws, bayes.gan_field_pusher(gen, grid), grid)
    return draws, stats


def _fff_inference(mset: MeasurementSet, ranges: ParamRanges, eps: float,
                   hmc_cfg: HmcConfig, grid, chain_seed: int,
                   include_energy: bool = True):
    target = bayes.four_fiber_posterior(mset, ranges, eps)
    draws = bayes.hmc_sample(target.logp_and_grad, np.zeros(target.dim),
                             hmc_cfg, np.random.default_rng(chain_seed))
    pusher = bayes.four_fiber_field_pusher(ranges, grid,
                                           include_energy=include_energy)
    stats = bayes.posterior_stress_stats(draws, pusher, grid)
    return draws, stats


def _truth_stats(params: FourFiberParams, grid, include_energy: bool = False):
    fld = synthgen.true_field(params, SensorLayout(
        kind=synthgen.LAYOUT_2D, points=np.asarray(grid)))
    stats = bayes.FieldStats(
        lambda_theta=fld.lambda_theta, lambda_z=fld.lambda_z,
        mean_sigma_theta=fld.sigma_theta,
        sd_sigma_theta=np.zeros_like(fld.sigma_theta),
        mean_sigma_z=fld.sigma_z, sd_sigma_z=np.zeros_like(fld.sigma_z))
    if include_energy:
        from .constitutive import energy_grid
        w = energy_grid(params, np.asarray(grid))
        stats.mean_energy = w
        stats.sd_energy = np.zeros_like(w)
    return stats, fld


def _setup_out(cfg: ExperimentConfig) -> str:
    os.makedirs(cfg.out_dir, exist_ok=True)
    _write(os.path.join(cfg.out_dir, "resolved_config.json"), cfg.to_json() + "\n")
    return cfg.out_dir


# ---------------------------------------------------------------------------
# Case I (1d line at fixed axial stretch) and the noise/points sweep
# ---------------------------------------------------------------------------

# Ground truth for the 1d study sits at the sampling-range midpoints (the
# mean of the training distribution); the 2d studies use the base values.
CASE1_TRUTH = "midpoint"
CASE1_DESK_EPOCHS = 20000
CASE2_DESK_EPOCHS = 6000

EVAL_LINE_N = 101


def _case1_cell(gen, truth: FourFiberParams, cfg: ExperimentConfig,
                eval_layout: SensorLayout, noise: float, n_points: int,
                seed: int):
    """One measurement draw + paired GAN/GP inference on a shared set.
    Returns (err_gan, err_gp, artifacts...)."""
    rng = np.random.default_rng(_subseed(seed, _SEED_MEAS))
    cell_cfg = replace(cfg, noise=noise, n_points=n_points)
    locations = _draw_locations(cell_cfg, rng)
    mset = synthgen.make_measurements(truth, locations, noise_scale=noise,
                                      mask=("sigma_theta",),
                                      seed=_subseed(seed, _SEED_MEAS) + 1)
    eps = cell_cfg.resolved_eps() if cell_cfg.likelihood_eps is None else cell_cfg.likelihood_eps
    grid = eval_layout.points
    truth_field = synthgen.true_field(truth, eval_layout)
    draws, stats = _gan_inference(gen, mset, eps, _hmc_config(cfg), grid,
                                  _subseed(seed, _SEED_CHAIN))
    err_gan = relative_error(stats.mean_sigma_theta, truth_field.sigma_theta)
    gp_out = baselines.gp_regress(mset, grid, noise_variance=eps**2,
                                  seed=_subseed(seed, _SEED_GP))
    gp_mean, gp_sd = gp_out["sigma_theta"]
    err_gp = relative_error(gp_mean, truth_field.sigma_theta)
    gp_stats = bayes.FieldStats(
        lambda_theta=grid[:, 0], lambda_z=grid[:, 1],
        mean_sigma_theta=gp_mean, sd_sigma_theta=gp_sd)
    return err_gan, err_gp, mset, draws, stats, gp_stats, truth_field


def run_case1(cfg: ExperimentConfig) -> ErrorReport:
    """1d prior + five noisy circumferential measurements; GAN-based
    posterior versus the GP baseline on the same data."""
    out = _setup_out(cfg)
    layout = line_layout()
    gen, _ = _train_or_load_prior(cfg, layout, CASE1_DESK_EPOCHS, out)
    truth = _truth_params(_ranges(cfg), CASE1_TRUTH)
    eval_layout = line_layout(n=EVAL_LINE_N)
    err_gan, err_gp, mset, draws, stats, gp_stats, truth_field = _case1_cell(
        gen, truth, cfg, eval_layout, cfg.noise, cfg.n_points, cfg.seed)
    synthgen.write_measurement_csv(os.path.join(out, "measurements.csv"), mset)
    bayes.write_stats_csv(os.path.join(out, "gan_stats.csv"), stats)
    bayes.write_stats_csv(os.path.join(out, "gp_stats.csv"), gp_stats)
    truth_stats = bayes.FieldStats(
        lambda_theta=eval_layout.points[:, 0], lambda_z=eval_layout.points[:, 1],
        mean_sigma_theta=truth_field.sigma_theta,
        sd_sigma_theta=np.zeros(EVAL_LINE_N))
    bayes.write_stats_csv(os.path.join(out, "truth_stats.csv"), truth_stats)
    bayes.write_draws_csv(os.path.join(out, "gan_draws.csv"), draws)
    report = ErrorReport(
        case="case1", seed=cfg.seed,
        errors={"gan": {"sigma_theta": err_gan}, "gp": {"sigma_theta": err_gp}},
        meta={"n_points": cfg.n_points, "noise": cfg.noise,
              "eps": cfg.resolved_eps(), "truth": CASE1_TRUTH,
              "accept_rate": draws.accept_rate})
    _write(os.path.join(out, "error_report.json"), report.to_json() + "\n")
    return report


def run_sweep(cfg: ExperimentConfig,
              noise_levels=(0.0, 0.05, 0.1, 0.2),
              point_counts=(3, 5, 10, 15),
              seeds=(0, 1, 2)) -> np.ndarray:
    """Noise-by-points error matrix (seed-averaged GAN-based errors), one
    trained prior shared across all cells, measurement draws paired by seed."""
    out = _setup_out(cfg)
    layout = line_layout()
    gen, _ = _train_or_load_prior(cfg, layout, CASE1_DESK_EPOCHS, out)
    truth = _truth_params(_ranges(cfg), CASE1_TRUTH)
    eval_layout = line_layout(n=EVAL_LINE_N)
    matrix = np.zeros((len(noise_levels), len(point_counts)))
    gp_matrix = np.zeros_like(matrix)
    for i, noise in enumerate(noise_levels):
        for j, n_points in enumerate(point_counts):
            errs, gps = [], []
            for seed in seeds:
                cell_seed = _subseed(cfg.seed, 7) + 1000 * seed + 17 * i + j
                err_gan, err_gp, *_ = _case1_cell(
                    gen, truth, cfg, eval_layout, noise, n_points, cell_seed)
                errs.append(err_gan)
                gps.append(err_gp)
            matrix[i, j] = np.mean(errs)
            gp_matrix[i, j] = np.mean(gps)
    header = "noise," + ",".join(f"points_{p}" for p in point_counts)
    for name, m in (("sweep_matrix.csv", matrix), ("sweep_matrix_gp.csv", gp_matrix)):
        lines = [header]
        for i, noise in enumerate(noise_levels):
            lines.append(repr(float(noise)) + ","
                         + ",".join(repr(float(v)) for v in m[i]))
        _write(os.path.join(out, name), "\n".join(lines) + "\n")
    report = ErrorReport(case="sweep", seed=cfg.seed,
                         errors={"gan": {"matrix": matrix.tolist()},
                                 "gp": {"matrix": gp_matrix.tolist()}},
                         meta={"noise_levels": list(noise_levels),
                               "point_counts": list(point_counts),
                               "seeds": list(seeds)})
    _write(os.path.join(out, "error_report.json"), report.to_json() + "\n")
    return matrix


# ---------------------------------------------------------------------------
# Case II (2d surfaces) and its variants
# ---------------------------------------------------------------------------

CASE2_VARIANTS = ("random7", "equi5", "partial", "ood")
DEFAULT_OOD_MU_KPA = tuple(range(5, 31))
OOD_TRAIN_MU_KPA = (15.0, 20.0)
EQUI_RANGE = (1.1, 1.6)


def _case2_measurements(cfg: ExperimentConfig, variant: str,
                        truth: FourFiberParams, seed: int) -> MeasurementSet:
    rng = np.random.default_rng(_subseed(seed, _SEED_MEAS))
    if variant == "equi5":
        lam = np.linspace(EQUI_RANGE[0], EQUI_RANGE[1], cfg.n_points)
        locations = np.column_stack([lam, lam])
    else:
        locations = _draw_locations(cfg, rng)
    mask = ("sigma_theta",) if variant == "partial" else cfg.mask
    return synthgen.make_measurements(truth, locations, noise_scale=cfg.noise,
                                      mask=mask, seed=_subseed(seed, _SEED_MEAS) + 1)


def _case2_infer_pair(gen, mset, ranges, eps, cfg, grid, seed):
    """GAN-based and model-specific inference on one shared measurement set."""
    gan_draws, gan_stats = _gan_inference(gen, mset, eps, _hmc_config(cfg),
                                          grid, _subseed(seed, _SEED_CHAIN))
    fff_draws, fff_stats = _fff_inference(mset, ranges, eps, _hmc_config(cfg),
                                          grid, _subseed(seed, _SEED_CHAIN) + 1)
    return (gan_draws, gan_stats), (fff_draws, fff_stats)


def _component_errors(stats, truth_field) -> dict:
    out = {"sigma_theta": relative_error(stats.mean_sigma_theta,
                                         truth_field.sigma_theta)}
    if stats.mean_sigma_z is not None:
        out["sigma_z"] = relative_error(stats.mean_sigma_z, truth_field.sigma_z)
    return out


def run_case2(cfg: ExperimentConfig, variant: str = "random7",
              ood_mu_kpa=DEFAULT_OOD_MU_KPA) -> ErrorReport:
    """2d energy-mode prior; posterior stress surfaces from sparse
    measurements, with the model-specific sampler run on the same data.

    Variants: random7 (full-information points at high stretch), equi5
    (points on the equal-stretch diagonal), partial (circumferential
    observations only), ood (loop over out-of-range shear moduli).
    """
    if variant not in CASE2_VARIANTS:
        raise ValueError(f"variant must be one of {CASE2_VARIANTS}")
    cfg = _case2_defaults(cfg, variant)
    out = _setup_out(cfg)
    layout = grid_layout()
    gen, _ = _train_or_load_prior(cfg, layout, CASE2_DESK_EPOCHS, out)
    ranges = _ranges(cfg)
    grid = layout.points
    eps = cfg.resolved_eps()

    if variant == "ood":
        return _run_ood(cfg, gen, ranges, grid, eps, out, ood_mu_kpa)

    truth = _truth_params(ranges, "base")
    mset = _case2_measurements(cfg, variant, truth, cfg.seed)
    truth_stats, truth_field = _truth_stats(truth, grid, include_energy=True)
    (gan_draws, gan_stats), (fff_draws, fff_stats) = _case2_infer_pair(
        gen, mset, ranges, eps, cfg, grid, cfg.seed)

    synthgen.write_measurement_csv(os.path.join(out, "measurements.csv"), mset)
    bayes.write_stats_csv(os.path.join(out, "gan_stats.csv"), gan_stats)
    bayes.write_stats_csv(os.path.join(out, "4ff_stats.csv"), fff_stats)
    bayes.write_stats_csv(os.path.join(out, "truth_stats.csv"), truth_stats)
    bayes.write_draws_csv(os.path.join(out, "gan_draws.csv"), gan_draws)
    bayes.write_draws_csv(os.path.join(out, "4ff_draws.csv"), fff_draws)

    errors = {"gan": _component_errors(gan_stats, truth_field),
              "4ff": _component_errors(fff_stats, truth_field)}
    meta = {"variant": variant, "n_points": len(mset), "noise": cfg.noise,
            "eps": eps,
            "mean_sd": {
                "gan": {"sigma_theta": float(np.mean(gan_stats.sd_sigma_theta)),
                        "sigma_z": float(np.mean(gan_stats.sd_sigma_z))},
                "4ff": {"sigma_theta": float(np.mean(fff_stats.sd_sigma_theta)),
                        "sigma_z": float(np.mean(fff_stats.sd_sigma_z))}},
            "accept_rate": {"gan": gan_draws.accept_rate,
                            "4ff": fff_draws.accept_rate}}
    report = ErrorReport(case=f"case2-{variant}", seed=cfg.seed,
                         errors=errors, meta=meta)
    _write(os.path.join(out, "error_report.json"), report.to_json() + "\n")
    return report


def _case2_defaults(cfg: ExperimentConfig, variant: str) -> ExperimentConfig:
    updates = {}
    if len(cfg.region) == 1:
        updates["region"] = ((1.4, 1.6), (1.4, 1.6))
    if variant in ("random7", "partial", "ood") and cfg.n_points == 5:
        updates["n_points"] = 7
    if variant == "ood" and cfg.mu_range_kpa is None:
        updates["mu_range_kpa"] = OOD_TRAIN_MU_KPA
    return replace(cfg, **updates) if updates else cfg


def _run_ood(cfg, gen, ranges, grid, eps, out, mu_values_kpa) -> ErrorReport:
    """Error-versus-shear-modulus curve: the prior was trained with the
    restricted modulus range; the data come from moduli swept across it."""
    rows = []
    curve = {}
    for k, mu_kpa in enumerate(mu_values_kpa):
        truth = _truth_params(ranges, "base", mu_kpa=float(mu_kpa))
        mset = _case2_measurements(cfg, "ood", truth, cfg.seed + 1000 * k)
        truth_field = synthgen.true_field(
            truth, SensorLayout(kind=synthgen.LAYOUT_2D, points=grid))
        (gd, gs), (fd, fs) = _case2_infer_pair(
            gen, mset, ranges, eps, cfg, grid, cfg.seed + 1000 * k)
        errs = {"gan": _component_errors(gs, truth_field),
                "4ff": _component_errors(fs, truth_field)}
        curve[float(mu_kpa)] = errs
        rows.append((float(mu_kpa),
                     errs["gan"]["sigma_theta"], errs["gan"]["sigma_z"],
                     errs["4ff"]["sigma_theta"], errs["4ff"]["sigma_z"]))
    lines = ["mu_kpa,err_sigma_theta_gan,err_sigma_z_gan,"
             "err_sigma_theta_4ff,err_sigma_z_4ff"]
    for row in rows:
        lines.append(",".join(repr(float(v)) for v in row))
    _write(os.path.join(out, "ood_curve.csv"), "\n".join(lines) + "\n")
    report = ErrorReport(
        case="case2-ood", seed=cfg.seed,
        errors={"curve": {format(mu, "g"): v for mu, v in curve.items()}},
        meta={"train_mu_range_kpa": list(cfg.mu_range_kpa),
              "eps": eps, "n_points": cfg.n_points, "noise": cfg.noise})
    _write(os.path.join(out, "error_report.json"), report.to_json() + "\n")
    return report


# ---------------------------------------------------------------------------
# Appendices: training-set size and sampling-region studies
# ---------------------------------------------------------------------------

def monotonicity_violations(mean_sigma_theta: np.ndarray,
                            grid_shape: tuple) -> int:
    """Count grid steps where the mean circumferential stress decreases as
    lambda_theta grows at fixed lambda_z (the learned-prior diagnostic)."""
    field = np.asarray(mean_sigma_theta).reshape(grid_shape)
    diffs = np.diff(field, axis=0)  # along lambda_theta
    return int(np.sum(diffs < 0))


def run_appendix_b(cfg: ExperimentConfig, n_list=(500, 1000, 2000),
                   meas_seeds=(0, 1, 2)) -> list[dict]:
    """Train one prior per historical-data size, then run the same
    measurements through each; reports errors and the monotonicity
    diagnostic. Datasets are nested (sample i is identical across sizes)."""
    out = _setup_out(cfg)
    layout = grid_layout()
    ranges = _ranges(cfg)
    truth = _truth_params(ranges, "base")
    grid = layout.points
    eps = cfg.resolved_eps()
    cfg2 = _case2_defaults(cfg, "random7")
    truth_field = synthgen.true_field(
        truth, SensorLayout(kind=synthgen.LAYOUT_2D, points=grid))
    results = []
    for n_train in n_list:
        sub = replace(cfg2, n_train=int(n_train), checkpoint=None,
                      out_dir=os.path.join(out, f"n{n_train}"))
        os.makedirs(sub.out_dir, exist_ok=True)
        gen, _ = _train_or_load_prior(sub, layout, CASE2_DESK_EPOCHS, sub.out_dir)
        errs_t, errs_z, viol = [], [], []
        for ms in meas_seeds:
            mset = _case2_measurements(cfg2, "random7", truth,
                                       _subseed(cfg.seed, 8) + ms)
            draws, stats = _gan_inference(gen, mset, eps, _hmc_config(cfg), grid,
                                          _subseed(cfg.seed, _SEED_CHAIN) + ms)
            errs_t.append(relative_error(stats.mean_sigma_theta,
                                         truth_field.sigma_theta))
            errs_z.append(relative_error(stats.mean_sigma_z,
                                         truth_field.sigma_z))
            viol.append(monotonicity_violations(stats.mean_sigma_theta,
                                                layout.grid_shape))
        results.append({"n_train": int(n_train),
                        "err_sigma_theta": float(np.mean(errs_t)),
                        "err_sigma_z": float(np.mean(errs_z)),
                        "monotonicity_violations": float(np.mean(viol))})
    lines = ["n_train,err_sigma_theta,err_sigma_z,monotonicity_violations"]
    for r in results:
        lines.append(f"{r['n_train']},{r['err_sigma_theta']!r},"
                     f"{r['err_sigma_z']!r},{r['monotonicity_violations']!r}")
    _write(os.path.join(out, "appendix_b.csv"), "\n".join(lines) + "\n")
    report = ErrorReport(case="appendix-b", seed=cfg.seed,
                         errors={"per_n": {str(r["n_train"]): r for r in results}},
                         meta={"meas_seeds": list(meas_seeds), "eps": eps})
    _write(os.path.join(out, "error_report.json"), report.to_json() + "\n")
    return results


def run_appendix_c(cfg: ExperimentConfig,
                   regions=((1.4, 1.6), (1.0, 1.65), (1.0, 1.2)),
                   n_points: int = 20,
                   meas_seeds=(0, 1, 2)) -> list[dict]:
    """Same trained prior, clean measurements clustered in different stretch
    regions; reports the per-region seed-averaged errors."""
    out = _setup_out(cfg)
    layout = grid_layout()
    gen, _ = _train_or_load_prior(cfg, layout, CASE2_DESK_EPOCHS, out)
    ranges = _ranges(cfg)
    truth = _truth_params(ranges, "base")
    grid = layout.points
    eps = cfg.resolved_eps()
    truth_field = synthgen.true_field(
        truth, SensorLayout(kind=synthgen.LAYOUT_2D, points=grid))
    results = []
    for ridx, (lo, hi) in enumerate(regions):
        errs_t, errs_z = [], []
        for ms in meas_seeds:
            sub = replace(cfg, region=((lo, hi), (lo, hi)), n_points=n_points,
                          noise=0.0)
            mset = _case2_measurements(
                sub, "random", truth, _subseed(cfg.seed, 9) + 100 * ridx + ms)
            draws, stats = _gan_inference(
                gen, mset, eps, _hmc_config(cfg), grid,
                _subseed(cfg.seed, _SEED_CHAIN) + 100 * ridx + ms)
            errs_t.append(relative_error(stats.mean_sigma_theta,
                                         truth_field.sigma_theta))
            errs_z.append(relative_error(stats.mean_sigma_z,
                                         truth_field.sigma_z))
        results.append({"region": [lo, hi],
                        "err_sigma_theta": float(np.mean(errs_t)),
                        "err_sigma_z": float(np.mean(errs_z))})
    lines = ["region_lo,region_hi,err_sigma_theta,err_sigma_z"]
    for r in results:
        lines.append(f"{r['region'][0]!r},{r['region'][1]!r},"
                     f"{r['err_sigma_theta']!r},{r['err_sigma_z']!r}")
    _write(os.path.join(out, "appendix_c.csv"), "\n".join(lines) + "\n")
    report = ErrorReport(
        case="appendix-c", seed=cfg.seed,
        errors={"per_region": {f"{r['region'][0]}-{r['region'][1]}": r
                               for r in results}},
        meta={"n_points": n_points, "eps": eps, "meas_seeds": list(meas_seeds)})
    _write(os.path.join(out, "error_report.json"), report.to_json() + "\n")
    return results


# ---------------------------------------------------------------------------
# Ingestion and reporting
# ---------------------------------------------------------------------------

def ingest_measurements(csv_path, eps: float) -> MeasurementSet:
    """Read an external measurement CSV (the documented schema), attach the
    user-provided likelihood scale, and warn about out-of-domain stretches
    (out-of-distribution inference is supported, not an error)."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    mset = synthgen.read_measurement_csv(csv_path, noise_scale=eps)
    lo, hi = DOMAIN
    outside = ((mset.lambda_theta < lo) | (mset.lambda_theta > hi)
               | (mset.lambda_z < lo) | (mset.lambda_z > hi))
    if np.any(outside):
        warnings.warn(
            f"{csv_path}: {int(outside.sum())} of {len(mset)} points lie "
            f"outside the trained stretch domain [{lo}, {hi}]",
            stacklevel=2)
    return mset


def collect_reports(root) -> list[dict]:
    """Gather every error_report.json under ``root`` (recursively)."""
    found = []
    for dirpath, _dirnames, filenames in sorted(os.walk(root)):
        if "error_report.json" in filenames:
            with open(os.path.join(dirpath, "error_report.json")) as fh:
                payload = json.load(fh)
            payload["_dir"] = os.path.relpath(dirpath, root)
            found.append(payload)
    return found


def summarize_reports(reports: list[dict]) -> str:
    """Flatten reports into a delimited summary (one row per case/method/
    component error)."""
    lines = ["dir,case,seed,method,component,error"]
    for rep in reports:
        for method, comps in sorted(rep.get("errors", {}).items()):
            if not isinstance(comps, dict):
                continue
            for comp, value in sorted(comps.items()):
                if isinstance(value, (int, float)):
                    lines.append(f"{rep['_dir']},{rep['case']},{rep['seed']},"
                                 f"{method},{comp},{value:.17g}")
    return "\n".join(lines) + "\n"
