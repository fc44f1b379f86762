"""Synthetic data generation: parameter sampling, prior datasets, measurements.

Parameter ranges follow the published murine-aorta reference values with
multiplicative variation bounds; all eight table rows (shear modulus, three
fiber-modulus/exponent pairs with the diagonal pair tied, and the diagonal
angle) are treated uniformly. Prior datasets hold stress curves or surfaces
evaluated on a fixed sensor layout, one row per sampled parameter set, and
record the parameter draws so any row can be audited against the closed-form
model. Measurement sets are sparse noisy observations with an optional
per-component mask.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import io
from .constitutive import (
    DEFAULT_EXPONENT_CAP,
    KPA_PER_UNIT,
    FourFiberParams,
    StressField,
    fiber_exponents,
    stress_kernel,
)

# Reference murine-aorta values: (base, unit) with base moduli in kPa,
# exponents dimensionless, angle in degrees.
BASE_VALUES_KPA = {
    "mu": 8.633,
    "k1_axial": 9.34,
    "k2_axial": 0.137,
    "k1_circ": 4.447,
    "k2_circ": 0.046,
    "k1_diag": 0.015,
    "k2_diag": 1.193,
    "alpha": 28.0,
}

# Multiplicative variation bounds applied to the base values.
VARIATIONS = {
    "mu": (0.1, 5.0),
    "k1_axial": (0.1, 5.0),
    "k2_axial": (0.01, 2.0),
    "k1_circ": (0.1, 5.0),
    "k2_circ": (0.01, 2.0),
    "k1_diag": (0.1, 5.0),
    "k2_diag": (0.01, 2.0),
    "alpha": (0.1, 2.0),
}

PARAM_KEYS = tuple(BASE_VALUES_KPA)

# Default stress cap for ex-vivo-style priors: 0.5 MPa = 5.0 internal units.
DEFAULT_STRESS_CAP = 5.0

STRESS_UNIT = "0.1MPa"

COMPONENTS = ("sigma_theta", "sigma_z")


def default_base_params() -> FourFiberParams:
    """The reference parameter set, converted to internal stress units."""
    b = BASE_VALUES_KPA
    return FourFiberParams.from_kpa(
        mu_kpa=b["mu"],
        k1_kpa=[b["k1_axial"], b["k1_circ"], b["k1_diag"], b["k1_diag"]],
        k2=[b["k2_axial"], b["k2_circ"], b["k2_diag"], b["k2_diag"]],
        alpha_deg=b["alpha"],
    )


@dataclass(frozen=True)
class ParamRanges:
    """Per-parameter uniform sampling bounds (moduli in kPa, alpha in deg).

    ``bounds`` maps each key in PARAM_KEYS to (lower, upper).
    """

    bounds: dict

    def __post_init__(self):
        for key in PARAM_KEYS:
            if key not in self.bounds:
                raise ValueError(f"missing bounds for {key!r}")
            lo, hi = self.bounds[key]
            if not lo < hi:
                raise ValueError(f"bounds for {key!r} must satisfy lower < upper")

    @classmethod
    def default(cls, **overrides) -> "ParamRanges":
        """Base values times variation bounds; keyword overrides replace
        individual (lower, upper) pairs, e.g. ``mu=(15.0, 20.0)``."""
        bounds = {
            key: (BASE_VALUES_KPA[key] * VARIATIONS[key][0],
                  BASE_VALUES_KPA[key] * VARIATIONS[key][1])
            for key in PARAM_KEYS
        }
        for key, pair in overrides.items():
            if key not in bounds:
                raise ValueError(f"unknown parameter {key!r}")
            bounds[key] = (float(pair[0]), float(pair[1]))
        return cls(bounds=bounds)

    def midpoint_params(self) -> FourFiberParams:
        mid = {k: 0.5 * (lo + hi) for k, (lo, hi) in self.bounds.items()}
        return _params_from_values(mid)

    def to_dict(self) -> dict:
        return {k: list(v) for k, v in self.bounds.items()}

    @classmethod
    def from_dict(cls, d: dict) -> "ParamRanges":
        return cls(bounds={k: (float(v[0]), float(v[1])) for k, v in d.items()})


def _params_from_values(values: dict) -> FourFiberParams:
    return FourFiberParams.from_kpa(
        mu_kpa=values["mu"],
        k1_kpa=[values["k1_axial"], values["k1_circ"],
                values["k1_diag"], values["k1_diag"]],
        k2=[values["k2_axial"], values["k2_circ"],
            values["k2_diag"], values["k2_diag"]],
        alpha_deg=values["alpha"],
    )


def sample_params(ranges: ParamRanges, rng: np.random.Generator) -> FourFiberParams:
    """Draw one parameter set, each entry uniform on its range, diagonal pair
    tied. Draw order follows PARAM_KEYS so results are seed-reproducible."""
    values = {key: rng.uniform(*ranges.bounds[key]) for key in PARAM_KEYS}
    return _params_from_values(values)


def params_to_row(params: FourFiberParams) -> np.ndarray:
    """Serialize to a 10-vector (mu, k1[0:4], k2[0:4], alpha_deg), internal units."""
    return np.concatenate([[params.mu], params.k1, params.k2, [params.alpha_deg]])


def params_from_row(row: np.ndarray) -> FourFiberParams:
    row = np.asarray(row, dtype=float)
    return FourFiberParams(mu=row[0], k1=row[1:5], k2=row[5:9], alpha_deg=row[9])


# ---------------------------------------------------------------------------
# Sensor layouts
# ---------------------------------------------------------------------------

LAYOUT_1D = "1d-line"
LAYOUT_2D = "2d-grid"

DOMAIN = (1.0, 1.65)
DEFAULT_LAMBDA_Z = 1.44


@dataclass(frozen=True)
class SensorLayout:
    """Ordered stretch points where stresses are represented.

    ``points`` has shape (n, 2) holding (lambda_theta, lambda_z). For the 1d
    kind all lambda_z entries are equal and only sigma_theta is represented;
    the 2d kind represents the concatenation [sigma_theta; sigma_z].
    """

    kind: str
    points: np.ndarray
    grid_shape: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "points", np.asarray(self.points, dtype=float))
        if self.kind not in (LAYOUT_1D, LAYOUT_2D):
            raise ValueError(f"unknown layout kind {self.kind!r}")
        if self.points.ndim != 2 or self.points.shape[1] != 2:
            raise ValueError("points must have shape (n, 2)")
        if np.any(self.points <= 0):
            raise ValueError("stretch points must be positive")

    @property
    def n_points(self) -> int:
        return self.points.shape[0]

    @property
    def representation_length(self) -> int:
        return self.n_points if self.kind == LAYOUT_1D else 2 * self.n_points

    def trunk_inputs(self) -> np.ndarray:
        """Coordinates fed to a location-encoding network: lambda_theta only
        for 1d layouts, both stretches for 2d layouts."""
        if self.kind == LAYOUT_1D:
            return self.points[:, :1]
        return self.points

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "points": self.points.tolist()}
        if self.grid_shape is not None:
            d["grid_shape"] = list(self.grid_shape)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SensorLayout":
        shape = tuple(d["grid_shape"]) if d.get("grid_shape") else None
        return cls(kind=d["kind"], points=np.array(d["points"]), grid_shape=shape)


def line_layout(n: int = 15, lambda_z: float = DEFAULT_LAMBDA_Z,
                lo: float = DOMAIN[0], hi: float = DOMAIN[1]) -> SensorLayout:
    """Equispaced lambda_theta line at fixed lambda_z."""
    lam = np.linspace(lo, hi, n)
    pts = np.column_stack([lam, np.full(n, float(lambda_z))])
    return SensorLayout(kind=LAYOUT_1D, points=pts)


def grid_layout(n: int = 25, lo: float = DOMAIN[0], hi: float = DOMAIN[1]) -> SensorLayout:
    """n-by-n tensor grid over [lo, hi]^2, lambda_theta varying fastest last."""
    ax = np.linspace(lo, hi, n)
    tt, zz = np.meshgrid(ax, ax, indexing="ij")
    pts = np.column_stack([tt.ravel(), zz.ravel()])
    return SensorLayout(kind=LAYOUT_2D, points=pts, grid_shape=(n, n))


# ---------------------------------------------------------------------------
# Prior dataset
# ---------------------------------------------------------------------------

@dataclass
class PriorDataset:
    """Stress representations of N sampled models on a fixed layout.

    ``samples`` has shape (N, layout.representation_length); ``param_rows``
    records the generating draws (one 10-vector per sample, see
    params_to_row) so rows can be re-derived with the cap disabled.
    """

    layout: SensorLayout
    samples: np.ndarray
    param_rows: np.ndarray
    ranges: ParamRanges
    seed: int
    cap: float | None
    unit: str = STRESS_UNIT

    def __post_init__(self):
        if self.samples.shape[1] != self.layout.representation_length:
            raise ValueError("sample width does not match layout")
        if self.samples.shape[0] != self.param_rows.shape[0]:
            raise ValueError("samples and param_rows disagree on N")

    @property
    def n_samples(self) -> int:
        return self.samples.shape[0]

    def save(self, path) -> None:
        meta = {
            "unit": self.unit,
            "layout": self.layout.to_dict(),
            "ranges": self.ranges.to_dict(),
            "seed": self.seed,
            "cap": self.cap,
            "n": int(self.n_samples),
        }
        io.save_arrays(path, meta, {"samples": self.samples,
                                    "param_rows": self.param_rows})

    @classmethod
    def load(cls, path) -> "PriorDataset":
        meta, arrays = io.load_arrays(path)
        return cls(
            layout=SensorLayout.from_dict(meta["layout"]),
            samples=arrays["samples"],
            param_rows=arrays["param_rows"],
            ranges=ParamRanges.from_dict(meta["ranges"]),
            seed=int(meta["seed"]),
            cap=meta["cap"],
            unit=meta["unit"],
        )


def _capped_stress(params: FourFiberParams, lam_t, lam_z, cap):
    """Stresses with the truncation cap applied from above.

    With the cap enabled, fiber exponents are clamped at the overflow guard
    instead of raising: any value large enough to overflow is far above any
    sensible cap, so the clamped value truncates to the same result.
    """
    if cap is None:
        expos = fiber_exponents(params.k2, params.alpha_rad, lam_t, lam_z)
        max_expo = max(float(np.max(e)) for e in expos)
        if max_expo > DEFAULT_EXPONENT_CAP:
            from .constitutive import ExponentOverflowError
            raise ExponentOverflowError(max_expo, DEFAULT_EXPONENT_CAP)
        sig_t, sig_z = stress_kernel(
            params.mu, params.k1, params.k2, params.alpha_rad, lam_t, lam_z)
        return np.asarray(sig_t), np.asarray(sig_z)
    sig_t, sig_z = stress_kernel(
        params.mu, params.k1, params.k2, params.alpha_rad, lam_t, lam_z,
        exponent_clip=DEFAULT_EXPONENT_CAP)
    return (np.minimum(np.asarray(sig_t), cap),
            np.minimum(np.asarray(sig_z), cap))


def representation_for(params: FourFiberParams, layout: SensorLayout,
                       cap: float | None = None) -> np.ndarray:
    """One dataset row: sigma_theta on 1d layouts, [sigma_theta; sigma_z]
    concatenated on 2d layouts, cap applied if given."""
    lam_t, lam_z = layout.points[:, 0], layout.points[:, 1]
    sig_t, sig_z = _capped_stress(params, lam_t, lam_z, cap)
    if layout.kind == LAYOUT_1D:
        return sig_t
    return np.concatenate([sig_t, sig_z])


def generate_dataset(ranges: ParamRanges, layout: SensorLayout, n_samples: int,
                     cap: float | None = None, seed: int = 0) -> PriorDataset:
    """Sample n_samples parameter sets and evaluate their stress
    representations on the layout.

    Each sample draws from an independent child stream of ``seed`` (index i
    uses stream i), so serial and sample-parallel generation agree exactly.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    streams = np.random.SeedSequence(seed).spawn(n_samples)
    rows = np.empty((n_samples, layout.representation_length))
    param_rows = np.empty((n_samples, 10))
    for i in range(n_samples):
        params = sample_params(ranges, np.random.default_rng(streams[i]))
        rows[i] = representation_for(params, layout, cap=cap)
        param_rows[i] = params_to_row(params)
    return PriorDataset(layout=layout, samples=rows, param_rows=param_rows,
                        ranges=ranges, seed=seed, cap=cap)


# ---------------------------------------------------------------------------
# Measurements
# ---------------------------------------------------------------------------

@dataclass
class MeasurementSet:
    """Sparse noisy stress observations with per-component presence.

    Unobserved components are NaN. ``noise_scale`` is the standard deviation
    of the additive Gaussian noise (also the default likelihood scale
    downstream).
    """

    lambda_theta: np.ndarray
    lambda_z: np.ndarray
    sigma_theta: np.ndarray
    sigma_z: np.ndarray
    noise_scale: float = 0.0
    seed: int | None = None
    unit: str = STRESS_UNIT

    def __post_init__(self):
        for name in ("lambda_theta", "lambda_z", "sigma_theta", "sigma_z"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        n = len(self.lambda_theta)
        if any(len(getattr(self, f)) != n
               for f in ("lambda_z", "sigma_theta", "sigma_z")):
            raise ValueError("measurement columns must have equal length")
        both_missing = np.isnan(self.sigma_theta) & np.isnan(self.sigma_z)
        if np.any(both_missing):
            raise ValueError("every point needs at least one observed component")

    def __len__(self) -> int:
        return len(self.lambda_theta)

    @property
    def points(self) -> np.ndarray:
        return np.column_stack([self.lambda_theta, self.lambda_z])

    @property
    def has_theta(self) -> np.ndarray:
        return ~np.isnan(self.sigma_theta)

    @property
    def has_z(self) -> np.ndarray:
        return ~np.isnan(self.sigma_z)

    @property
    def n_observations(self) -> int:
        return int(self.has_theta.sum() + self.has_z.sum())


def make_measurements(params: FourFiberParams, locations: np.ndarray,
                      noise_scale: float = 0.0,
                      mask: tuple = COMPONENTS,
                      seed: int = 0) -> MeasurementSet:
    """Evaluate the model at ``locations`` (n, 2) and add scaled standard
    normal noise to each component named in ``mask``; the others are NaN."""
    locations = np.asarray(locations, dtype=float)
    if locations.ndim != 2 or locations.shape[1] != 2 or len(locations) == 0:
        raise ValueError("locations must be a non-empty (n, 2) array")
    unknown = set(mask) - set(COMPONENTS)
    if unknown or not mask:
        raise ValueError(f"mask must name components from {COMPONENTS}")
    field = stress_kernel(params.mu, params.k1, params.k2, params.alpha_rad,
                          locations[:, 0], locations[:, 1])
    rng = np.random.default_rng(seed)
    noise = noise_scale * rng.standard_normal((len(locations), 2))
    sig_t = np.asarray(field[0]) + noise[:, 0]
    sig_z = np.asarray(field[1]) + noise[:, 1]
    if "sigma_theta" not in mask:
        sig_t = np.full(len(locations), np.nan)
    if "sigma_z" not in mask:
        sig_z = np.full(len(locations), np.nan)
    return MeasurementSet(lambda_theta=locations[:, 0], lambda_z=locations[:, 1],
                          sigma_theta=sig_t, sigma_z=sig_z,
                          noise_scale=float(noise_scale), seed=seed)


def _fmt(x: float) -> str:
    return "" if math.isnan(x) else repr(float(x))


def write_measurement_csv(path, mset: MeasurementSet) -> None:
    """Measurement CSV: header row then one line per point; masked
    components are empty cells."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["lambda_theta", "lambda_z", "sigma_theta", "sigma_z"])
        for i in range(len(mset)):
            writer.writerow([
                _fmt(mset.lambda_theta[i]), _fmt(mset.lambda_z[i]),
                _fmt(mset.sigma_theta[i]), _fmt(mset.sigma_z[i]),
            ])


class MeasurementCsvError(ValueError):
    """Malformed measurement CSV; message carries the offending line number."""


def read_measurement_csv(path, noise_scale: float = 0.0) -> MeasurementSet:
    """Parse the measurement CSV schema. Raises MeasurementCsvError with a
    line number for malformed rows; empty stress cells become NaN."""
    expected = ["lambda_theta", "lambda_z", "sigma_theta", "sigma_z"]
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise MeasurementCsvError(f"{path}: empty file (header row required)")
        if [h.strip() for h in header] != expected:
            raise MeasurementCsvError(
                f"{path}: line 1: expected header {','.join(expected)}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 4:
                raise MeasurementCsvError(f"{path}: line {lineno}: expected 4 columns")
            try:
                lam_t = float(row[0])
                lam_z = float(row[1])
                sig_t = float(row[2]) if row[2].strip() else math.nan
                sig_z = float(row[3]) if row[3].strip() else math.nan
            except ValueError:
                raise MeasurementCsvError(f"{path}: line {lineno}: non-numeric cell")
            if not (lam_t > 0 and lam_z > 0):
                raise MeasurementCsvError(
                    f"{path}: line {lineno}: stretches must be positive")
            if math.isnan(sig_t) and math.isnan(sig_z):
                raise MeasurementCsvError(
                    f"{path}: line {lineno}: no observed stress component")
            rows.append((lam_t, lam_z, sig_t, sig_z))
    if not rows:
        raise MeasurementCsvError(f"{path}: no measurement rows")
    arr = np.array(rows)
    return MeasurementSet(lambda_theta=arr[:, 0], lambda_z=arr[:, 1],
                          sigma_theta=arr[:, 2], sigma_z=arr[:, 3],
                          noise_scale=float(noise_scale))


def true_field(params: FourFiberParams, layout: SensorLayout) -> StressField:
    """Uncapped stress field on a layout (oracle for error metrics)."""
    lam_t, lam_z = layout.points[:, 0], layout.points[:, 1]
    sig_t, sig_z = stress_kernel(params.mu, params.k1, params.k2,
                                 params.alpha_rad, lam_t, lam_z)
    return StressField(lambda_theta=lam_t, lambda_z=lam_z,
                       sigma_theta=np.asarray(sig_t), sigma_z=np.asarray(sig_z))
