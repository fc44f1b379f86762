"""Readers for the experiment output files this package consumes.

Only the documented delimited schemas are parsed here; nothing imports the
model code. Schema violations raise SchemaError with a file/line message.
"""

from __future__ import annotations

import csv

import numpy as np


class SchemaError(ValueError):
    """Input file does not match its documented schema."""


STATS_COLUMNS = ["lambda_theta", "lambda_z", "mean_sigma_theta",
                 "sd_sigma_theta", "mean_sigma_z", "sd_sigma_z"]
ENERGY_COLUMNS = ["mean_W", "sd_W"]

MEASUREMENT_COLUMNS = ["lambda_theta", "lambda_z", "sigma_theta", "sigma_z"]


def _float_or_nan(cell):
    cell = cell.strip()
    return float(cell) if cell else np.nan


def read_stats_csv(path):
    """Read a posterior-stats CSV.

    Returns a dict with the column arrays (absent components as None), the
    unit tag from the leading comment line, and the inferred grid shape for
    2d files (points must form a tensor grid ordered lambda_theta-major).
    """
    with open(path, newline="") as fh:
        first = fh.readline()
        unit = "0.1MPa"
        if first.startswith("#"):
            if ":" in first:
                unit = first.split(":", 1)[1].strip()
            header_line = fh.readline()
        else:
            header_line = first
        header = [h.strip() for h in header_line.strip().split(",")]
        if header[:6] != STATS_COLUMNS or header[6:] not in ([], ENERGY_COLUMNS):
            raise SchemaError(f"{path}: unexpected stats header {header}")
        rows = []
        for lineno, row in enumerate(csv.reader(fh), start=3):
            if not row:
                continue
            if len(row) != len(header):
                raise SchemaError(f"{path}: line {lineno}: expected "
                                  f"{len(header)} columns")
            try:
                rows.append([_float_or_nan(c) for c in row])
            except ValueError:
                raise SchemaError(f"{path}: line {lineno}: non-numeric cell")
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    data = np.asarray(rows)
    out = {"unit": unit, "lambda_theta": data[:, 0], "lambda_z": data[:, 1],
           "mean_sigma_theta": data[:, 2], "sd_sigma_theta": data[:, 3]}
    for i, name in enumerate(("mean_sigma_z", "sd_sigma_z"), start=4):
        col = data[:, i]
        out[name] = None if np.all(np.isnan(col)) else col
    if len(header) == 8:
        out["mean_W"], out["sd_W"] = data[:, 6], data[:, 7]
    else:
        out["mean_W"] = out["sd_W"] = None
    out["grid_shape"] = _grid_shape(out["lambda_theta"], out["lambda_z"])
    return out


def _grid_shape(lam_t, lam_z):
    """(n_theta, n_z) when the rows form a theta-major tensor grid, else None."""
    ut, uz = np.unique(lam_t), np.unique(lam_z)
    if len(uz) == 1 or len(ut) * len(uz) != len(lam_t):
        return None
    tt = lam_t.reshape(len(ut), len(uz))
    zz = lam_z.reshape(len(ut), len(uz))
    if np.allclose(tt, ut[:, None]) and np.allclose(zz, uz[None, :]):
        return (len(ut), len(uz))
    return None


def read_measurements_csv(path):
    """Measurement CSV: stretches plus per-component stress cells (empty when
    unobserved)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise SchemaError(f"{path}: empty file")
        if header != MEASUREMENT_COLUMNS:
            raise SchemaError(f"{path}: unexpected measurement header {header}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 4:
                raise SchemaError(f"{path}: line {lineno}: expected 4 columns")
            try:
                rows.append([_float_or_nan(c) for c in row])
            except ValueError:
                raise SchemaError(f"{path}: line {lineno}: non-numeric cell")
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    data = np.asarray(rows)
    return {"lambda_theta": data[:, 0], "lambda_z": data[:, 1],
            "sigma_theta": data[:, 2], "sigma_z": data[:, 3]}


def read_matrix_csv(path):
    """Sweep matrix: header `noise,points_a,points_b,...`, one row per noise
    level. Returns (noise_levels, point_counts, matrix)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise SchemaError(f"{path}: empty file")
        if not header or header[0] != "noise" or len(header) < 2 \
                or not all(h.startswith("points_") for h in header[1:]):
            raise SchemaError(f"{path}: unexpected matrix header {header}")
        try:
            counts = [int(h.split("_", 1)[1]) for h in header[1:]]
        except ValueError:
            raise SchemaError(f"{path}: malformed points_* column name")
        noise, rows = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise SchemaError(f"{path}: line {lineno}: ragged row")
            try:
                noise.append(float(row[0]))
                rows.append([float(c) for c in row[1:]])
            except ValueError:
                raise SchemaError(f"{path}: line {lineno}: non-numeric cell")
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return np.asarray(noise), np.asarray(counts), np.asarray(rows)


def read_curve_csv(path):
    """Generic curve file: numeric header-named columns, first column is the
    abscissa (the error-versus-modulus study uses mu_kpa,err_*)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise SchemaError(f"{path}: empty file")
        if len(header) < 2:
            raise SchemaError(f"{path}: curve file needs >= 2 columns")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise SchemaError(f"{path}: line {lineno}: ragged row")
            try:
                rows.append([float(c) for c in row])
            except ValueError:
                raise SchemaError(f"{path}: line {lineno}: non-numeric cell")
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    data = np.asarray(rows)
    return header, data
