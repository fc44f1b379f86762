"""Command-line interface for data generation, training, inference, and the
synthetic experiment suite."""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace

import numpy as np

from . import baselines, bayes, funcprior, harness, io, synthgen
from .harness import ExperimentConfig
from .synthgen import KPA_PER_UNIT


def _experiment_config(args, case: str, default_out: str) -> ExperimentConfig:
    """Build a config from --config JSON (if given) plus flag overrides."""
    if getattr(args, "config", None):
        cfg = ExperimentConfig.from_json_file(args.config)
    else:
        cfg = ExperimentConfig()
    updates = {"case": case}
    if getattr(args, "seed", None) is not None:
        updates["seed"] = args.seed
    updates["out_dir"] = args.out or (cfg.out_dir if getattr(args, "config", None)
                                      else default_out)
    if getattr(args, "paper_scale", False):
        updates["paper_scale"] = True
    if getattr(args, "noise", None) is not None:
        updates["noise"] = args.noise
    if getattr(args, "points", None) is not None:
        updates["n_points"] = args.points
    if getattr(args, "epochs", None) is not None:
        updates["gan_epochs"] = args.epochs
    if getattr(args, "region", None):
        vals = args.region
        if len(vals) == 2:
            updates["region"] = ((vals[0], vals[1]),)
        elif len(vals) == 4:
            updates["region"] = ((vals[0], vals[1]), (vals[2], vals[3]))
        else:
            raise SystemExit("--region takes 2 floats (1d) or 4 floats (2d)")
    if getattr(args, "mask", None):
        updates["mask"] = (("sigma_theta",) if args.mask == "theta"
                           else ("sigma_theta", "sigma_z"))
    if getattr(args, "checkpoint", None):
        updates["checkpoint"] = args.checkpoint
    if getattr(args, "eps", None) is not None:
        updates["likelihood_eps"] = args.eps
    if getattr(args, "draws", None) is not None:
        updates["hmc_draws"] = args.draws
    if getattr(args, "burn", None) is not None:
        updates["hmc_burn"] = args.burn
    if getattr(args, "nuts", False):
        updates["use_nuts"] = True
    return replace(cfg, **updates)


def _add_common(p, default_out):
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--config", help="experiment config JSON")
    p.add_argument("--out", default=None, help=f"output directory (default {default_out})")
    p.add_argument("--paper-scale", action="store_true",
                   help="use the full 100k-epoch training setting")
    p.add_argument("--noise", type=float, default=None)
    p.add_argument("--points", type=int, default=None)
    p.add_argument("--epochs", type=int, default=None, help="generator iterations")
    p.add_argument("--region", type=float, nargs="+", default=None,
                   metavar="BOUND")
    p.add_argument("--mask", choices=["theta", "both"], default=None)
    p.add_argument("--checkpoint", default=None, help="trained prior directory")
    p.add_argument("--eps", type=float, default=None, help="likelihood scale")
    p.add_argument("--draws", type=int, default=None, help="kept posterior draws")
    p.add_argument("--burn", type=int, default=None, help="burn-in iterations")
    p.add_argument("--nuts", action="store_true",
                   help="No-U-Turn sampler instead of fixed-length HMC")


def cmd_gen_data(args):
    layout = (synthgen.line_layout() if args.layout == "1d"
              else synthgen.grid_layout())
    ranges = (synthgen.ParamRanges.default(mu=tuple(args.mu_range))
              if args.mu_range else synthgen.ParamRanges.default())
    dataset = synthgen.generate_dataset(ranges, layout, args.n, cap=args.cap,
                                        seed=args.seed or 0)
    dataset.save(args.out)
    print(f"wrote {args.out}: {dataset.n_samples} samples x "
          f"{layout.representation_length} values")


def cmd_train_prior(args):
    dataset = synthgen.PriorDataset.load(args.data)
    epochs = 100000 if args.paper_scale else (args.epochs or
              (harness.CASE1_DESK_EPOCHS if dataset.layout.kind == synthgen.LAYOUT_1D
               else harness.CASE2_DESK_EPOCHS))
    cfg = funcprior.GanConfig(epochs=epochs, seed=args.seed or 0,
                              n_critic=args.n_critic, batch_size=args.batch)
    trained = funcprior.train(dataset, cfg, mode=args.mode, progress=True)
    funcprior.save_prior(args.out, trained,
                         dataset_checksum=io.file_sha256(args.data))
    print(f"saved prior to {args.out}")


def cmd_infer(args):
    mset = harness.ingest_measurements(args.measurements, eps=args.eps)
    os.makedirs(args.out, exist_ok=True)
    hmc_cfg = bayes.HmcConfig(n_draws=args.draws, n_burn=args.burn,
                              use_nuts=args.nuts)
    rng = np.random.default_rng(args.seed or 0)
    if args.method == "gan":
        if not args.checkpoint:
            raise SystemExit("--checkpoint is required for method=gan")
        gen, _, manifest = funcprior.load_prior(args.checkpoint)
        layout = synthgen.SensorLayout.from_dict(manifest["layout"])
        target = bayes.gan_posterior(gen, mset, args.eps)
        draws = bayes.hmc_sample(target.logp_and_grad, np.zeros(target.dim),
                                 hmc_cfg, rng)
        stats = bayes.posterior_stress_stats(
            draws, bayes.gan_field_pusher(gen, layout.points), layout.points)
    else:
        ranges = synthgen.ParamRanges.default()
        layout = synthgen.grid_layout()
        target = bayes.four_fiber_posterior(mset, ranges, args.eps)
        draws = bayes.hmc_sample(target.logp_and_grad, np.zeros(target.dim),
                                 hmc_cfg, rng)
        stats = bayes.posterior_stress_stats(
            draws, bayes.four_fiber_field_pusher(ranges, layout.points),
            layout.points)
    bayes.write_draws_csv(os.path.join(args.out, f"{args.method}_draws.csv"), draws)
    bayes.write_stats_csv(os.path.join(args.out, f"{args.method}_stats.csv"), stats)
    print(f"{args.method}: {draws.n_draws} draws, accept rate "
          f"{draws.accept_rate:.2f} -> {args.out}")


def cmd_baseline(args):
    mset = harness.ingest_measurements(args.measurements,
                                       eps=args.eps or harness.NOISELESS_EPS_FLOOR)
    os.makedirs(args.out, exist_ok=True)
    if args.kind == "gp":
        layout = synthgen.grid_layout() if np.ptp(mset.lambda_z) > 1e-12 \
            else synthgen.line_layout(n=harness.EVAL_LINE_N,
                                      lambda_z=float(mset.lambda_z[0]))
        result = baselines.gp_regress(mset, layout.points,
                                      noise_variance=(args.eps or 0.1) ** 2)
        theta = result["sigma_theta"]
        z = result["sigma_z"]
        stats = bayes.FieldStats(
            lambda_theta=layout.points[:, 0], lambda_z=layout.points[:, 1],
            mean_sigma_theta=theta[0], sd_sigma_theta=theta[1],
            mean_sigma_z=None if z is None else z[0],
            sd_sigma_z=None if z is None else z[1])
        bayes.write_stats_csv(os.path.join(args.out, "gp_stats.csv"), stats)
        print(f"gp: wrote {args.out}/gp_stats.csv")
        return
    init = synthgen.ParamRanges.default().midpoint_params()
    result = baselines.nonlinear_fit(mset, init, weighting=args.weighting)
    p = result.params
    payload = {
        "params_kpa": {
            "mu": p.mu * KPA_PER_UNIT,
            "k1": (p.k1 * KPA_PER_UNIT).tolist(),
            "k2": p.k2.tolist(),
            "alpha_deg": p.alpha_deg,
        },
        "residual_norm": result.residual_norm,
        "iterations": result.iterations,
        "converged": result.converged,
        "message": result.message,
    }
    io.atomic_write_text(os.path.join(args.out, "fit_report.json"),
                         json.dumps(payload, indent=2, sort_keys=True) + "\n")
    print(f"nlreg: residual {result.residual_norm:.4g} in "
          f"{result.iterations} iterations -> {args.out}/fit_report.json")


def cmd_case1(args):
    cfg = _experiment_config(args, "case1", "runs/case1")
    report = harness.run_case1(cfg)
    print(json.dumps(report.errors, indent=2, sort_keys=True))


def cmd_sweep(args):
    cfg = _experiment_config(args, "sweep", "runs/sweep")
    matrix = harness.run_sweep(
        cfg, noise_levels=tuple(args.noise_levels),
        point_counts=tuple(args.point_counts), seeds=tuple(args.seeds))
    print(matrix)


def cmd_case2(args):
    cfg = _experiment_config(args, f"case2-{args.variant}",
                             f"runs/case2_{args.variant}")
    kwargs = {}
    if args.variant == "ood" and args.mu_values:
        kwargs["ood_mu_kpa"] = tuple(args.mu_values)
    report = harness.run_case2(cfg, variant=args.variant, **kwargs)
    print(json.dumps(report.errors, indent=2, sort_keys=True))


def cmd_appendix_b(args):
    cfg = _experiment_config(args, "appendix-b", "runs/appendix_b")
    results = harness.run_appendix_b(cfg, n_list=tuple(args.n_list))
    print(json.dumps(results, indent=2))


def cmd_appendix_c(args):
    cfg = _experiment_config(args, "appendix-c", "runs/appendix_c")
    results = harness.run_appendix_c(cfg)
    print(json.dumps(results, indent=2))


def cmd_ingest(args):
    mset = harness.ingest_measurements(args.infile, eps=args.eps)
    if args.out:
        synthgen.write_measurement_csv(args.out, mset)
    print(f"{args.infile}: {len(mset)} points, "
          f"{mset.n_observations} observed components, eps={args.eps}")


def cmd_report(args):
    reports = harness.collect_reports(args.root)
    summary = harness.summarize_reports(reports)
    out_file = args.out or os.path.join(args.root, "summary.csv")
    io.atomic_write_text(out_file, summary)
    print(summary, end="")
    print(f"[summary written to {out_file}]")
    if args.figures:
        try:
            from vesselplots import auto as plots_auto
        except ImportError:
            print("figure rendering skipped: the vesselplots package is not "
                  "installed (see plots/ in the repository)")
            return
        images = plots_auto.render_tree(args.root)
        for img in images:
            print(f"rendered {img}")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="vesselprior",
        description="Functional priors and Bayesian stress inference for "
                    "biaxial vessel constitutive laws")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate a prior training dataset")
    p.add_argument("--layout", choices=["1d", "2d"], default="1d")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--cap", type=float, default=None,
                   help="stress truncation cap in 0.1 MPa units")
    p.add_argument("--mu-range", type=float, nargs=2, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train-prior", help="train the adversarial prior")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--n-critic", type=int, default=5)
    p.add_argument("--batch", type=int, default=50)
    p.add_argument("--mode", choices=list(funcprior.MODES), default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--paper-scale", action="store_true")
    p.set_defaults(func=cmd_train_prior)

    p = sub.add_parser("infer", help="posterior inference from a measurement CSV")
    p.add_argument("--method", choices=["gan", "4ff"], required=True)
    p.add_argument("--measurements", required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--draws", type=int, default=1000)
    p.add_argument("--burn", type=int, default=1000)
    p.add_argument("--nuts", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("baseline", help="GP regression or nonlinear fit")
    p.add_argument("--kind", choices=["gp", "nlreg"], required=True)
    p.add_argument("--measurements", required=True)
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--weighting", choices=["none", "inverse-stress"],
                   default="none")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("case1", help="1d study: prior vs GP on sparse data")
    _add_common(p, "runs/case1")
    p.set_defaults(func=cmd_case1)

    p = sub.add_parser("sweep", help="noise-by-points error matrix")
    _add_common(p, "runs/sweep")
    p.add_argument("--noise-levels", type=float, nargs="+",
                   default=[0.0, 0.05, 0.1, 0.2])
    p.add_argument("--point-counts", type=int, nargs="+",
                   default=[3, 5, 10, 15])
    p.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("case2", help="2d study with paired inference methods")
    _add_common(p, "runs/case2")
    p.add_argument("--variant", choices=list(harness.CASE2_VARIANTS),
                   default="random7")
    p.add_argument("--mu-values", type=float, nargs="+", default=None,
                   help="shear moduli (kPa) for the ood variant")
    p.set_defaults(func=cmd_case2)

    p = sub.add_parser("appendix-b", help="training-set size study")
    _add_common(p, "runs/appendix_b")
    p.add_argument("--n-list", type=int, nargs="+", default=[500, 1000, 2000])
    p.set_defaults(func=cmd_appendix_b)

    p = sub.add_parser("appendix-c", help="sampling-region study")
    _add_common(p, "runs/appendix_c")
    p.set_defaults(func=cmd_appendix_c)

    p = sub.add_parser("ingest", help="validate an external measurement CSV")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--out", default=None,
                   help="write the normalized CSV here")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("report", help="aggregate error reports into a summary")
    p.add_argument("--root", required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--figures", action="store_true",
                   help="also render figures (requires the plots package)")
    p.set_defaults(func=cmd_report)

    args = parser.parse_args(argv)
    args.func(args)
    return 0


if __name__ == "__main__":
    sys.exit(main())
