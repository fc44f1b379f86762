"""Figure renderers for the experiment CSV outputs.

Five kinds: 1d mean curves with 2-SD bands, 2d mean surfaces, 2d contour
comparisons, error heatmaps, and error-versus-parameter curves. All render
to a file and stay deterministic (fixed size, dpi, and styling); stress axes
are labelled with the unit tag read from the stats header.
"""

from __future__ import annotations

import numpy as np
import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from . import schemas  # noqa: E402
from .schemas import SchemaError  # noqa: E402

FIGSIZE_1D = (6.0, 4.0)
DPI = 150

KINDS = ("band-1d", "surface-2d", "contour-2d", "heatmap", "curve")


def _unit_label(unit):
    return f"stress [{unit}]"


def _overlay_measurements(ax, meas, component):
    values = meas[component]
    keep = ~np.isnan(values)
    ax.plot(meas["lambda_theta"][keep], values[keep], "k*", markersize=9,
            label="measurements", zorder=5)


def render_band_1d(stats_path, out_path, measurements_path=None,
                   truth_path=None, title=None):
    """Mean curve with a 2-SD band on a fixed-axial-stretch line."""
    stats = schemas.read_stats_csv(stats_path)
    lam = stats["lambda_theta"]
    mean, sd = stats["mean_sigma_theta"], stats["sd_sigma_theta"]
    fig, ax = plt.subplots(figsize=FIGSIZE_1D)
    ax.fill_between(lam, mean - 2 * sd, mean + 2 * sd, color="orange",
                    alpha=0.4, label="2 SD")
    ax.plot(lam, mean, "r--", lw=2, label="posterior mean")
    if truth_path:
        truth = schemas.read_stats_csv(truth_path)
        ax.plot(truth["lambda_theta"], truth["mean_sigma_theta"], "k-",
                lw=1.5, label="truth")
    if measurements_path:
        meas = schemas.read_measurements_csv(measurements_path)
        _overlay_measurements(ax, meas, "sigma_theta")
    ax.set_xlabel(r"$\lambda_\theta$")
    ax.set_ylabel(_unit_label(stats["unit"]))
    ax.legend(loc="upper left", fontsize=9)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(out_path, dpi=DPI)
    plt.close(fig)


def _require_grid(stats, path):
    shape = stats["grid_shape"]
    if shape is None:
        raise SchemaError(f"{path}: rows do not form a 2d tensor grid")
    return shape


def render_surface_2d(stats_path, out_path, measurements_path=None,
                      title=None):
    """Mean surfaces bounded by +/- 2 SD sheets, one panel per component."""
    stats = schemas.read_stats_csv(stats_path)
    shape = _require_grid(stats, stats_path)
    lam_t = stats["lambda_theta"].reshape(shape)
    lam_z = stats["lambda_z"].reshape(shape)
    panels = [("mean_sigma_theta", "sd_sigma_theta", r"$\sigma_\theta$")]
    if stats["mean_sigma_z"] is not None:
        panels.append(("mean_sigma_z", "sd_sigma_z", r"$\sigma_z$"))
    if stats["mean_W"] is not None:
        panels.append(("mean_W", "sd_W", "W"))
    meas = (schemas.read_measurements_csv(measurements_path)
            if measurements_path else None)
    fig = plt.figure(figsize=(5.2 * len(panels), 4.6))
    for i, (mean_key, sd_key, label) in enumerate(panels, start=1):
        ax = fig.add_subplot(1, len(panels), i, projection="3d")
        mean = stats[mean_key].reshape(shape)
        sd = stats[sd_key].reshape(shape)
        ax.plot_surface(lam_t, lam_z, mean, color="red", alpha=0.85)
        ax.plot_surface(lam_t, lam_z, mean + 2 * sd, color="orange", alpha=0.3)
        ax.plot_surface(lam_t, lam_z, mean - 2 * sd, color="orange", alpha=0.3)
        if meas is not None and mean_key.startswith("mean_sigma"):
            comp = "sigma_theta" if mean_key.endswith("theta") else "sigma_z"
            keep = ~np.isnan(meas[comp])
            ax.scatter(meas["lambda_theta"][keep], meas["lambda_z"][keep],
                       meas[comp][keep], color="black", marker="*", s=45)
        ax.set_xlabel(r"$\lambda_\theta$")
        ax.set_ylabel(r"$\lambda_z$")
        ax.set_title(f"{label} [{stats['unit']}]", fontsize=10)
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(out_path, dpi=DPI)
    plt.close(fig)


def render_contour_2d(stats_path, out_path, truth_path=None,
                      measurements_path=None, title=None):
    """Mean-field contour lines against (optional) truth contours, with
    measurement locations as asterisks."""
    stats = schemas.read_stats_csv(stats_path)
    shape = _require_grid(stats, stats_path)
    lam_t = stats["lambda_theta"].reshape(shape)
    lam_z = stats["lambda_z"].reshape(shape)
    truth = schemas.read_stats_csv(truth_path) if truth_path else None
    meas = (schemas.read_measurements_csv(measurements_path)
            if measurements_path else None)
    components = [("mean_sigma_theta", r"$\sigma_\theta$")]
    if stats["mean_sigma_z"] is not None:
        components.append(("mean_sigma_z", r"$\sigma_z$"))
    fig, axes = plt.subplots(1, len(components),
                             figsize=(5.4 * len(components), 4.4))
    axes = np.atleast_1d(axes)
    for ax, (key, label) in zip(axes, components):
        field = stats[key].reshape(shape)
        levels = np.linspace(field.min(), field.max(), 9)[1:-1]
        if truth is not None and truth.get(key) is not None:
            tf = truth[key].reshape(_require_grid(truth, truth_path))
            ax.contour(lam_t, lam_z, tf, levels=levels, colors="gray",
                       linestyles="dashed", linewidths=1.0, alpha=0.7)
        cs = ax.contour(lam_t, lam_z, field, levels=levels, cmap="RdBu_r",
                        linewidths=1.6)
        ax.clabel(cs, fontsize=7, fmt="%.2f")
        if meas is not None:
            comp = "sigma_theta" if key.endswith("theta") else "sigma_z"
            keep = ~np.isnan(meas[comp])
            ax.plot(meas["lambda_theta"][keep], meas["lambda_z"][keep], "k*",
                    markersize=9)
        ax.set_xlabel(r"$\lambda_\theta$")
        ax.set_ylabel(r"$\lambda_z$")
        ax.set_title(f"{label} [{stats['unit']}]", fontsize=10)
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(out_path, dpi=DPI)
    plt.close(fig)


def render_heatmap(matrix_path, out_path, title=None):
    """Error heatmap of the noise-by-points sweep matrix."""
    noise, counts, matrix = schemas.read_matrix_csv(matrix_path)
    fig, ax = plt.subplots(figsize=(5.4, 4.2))
    im = ax.imshow(matrix, cmap="viridis", aspect="auto", origin="upper")
    ax.set_xticks(range(len(counts)), [str(c) for c in counts])
    ax.set_yticks(range(len(noise)), [format(n, "g") for n in noise])
    ax.set_xlabel("measurement points")
    ax.set_ylabel("noise scale")
    for i in range(matrix.shape[0]):
        for j in range(matrix.shape[1]):
            ax.text(j, i, f"{matrix[i, j]:.3f}", ha="center", va="center",
                    color="white", fontsize=8)
    fig.colorbar(im, ax=ax, label="relative error")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(out_path, dpi=DPI)
    plt.close(fig)


def render_curve(curve_path, out_path, title=None, shade=None):
    """Error curves against the first column (e.g. out-of-range moduli);
    ``shade=(lo, hi)`` marks the training interval."""
    header, data = schemas.read_curve_csv(curve_path)
    fig, ax = plt.subplots(figsize=FIGSIZE_1D)
    x = data[:, 0]
    for j in range(1, data.shape[1]):
        ax.plot(x, data[:, j], marker="o", ms=3.5, lw=1.4, label=header[j])
    if shade is not None:
        ax.axvspan(shade[0], shade[1], color="gray", alpha=0.25,
                   label="training range")
    ax.set_xlabel(header[0])
    ax.set_ylabel("relative error")
    ax.legend(fontsize=8)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(out_path, dpi=DPI)
    plt.close(fig)
