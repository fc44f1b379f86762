"""Four-fiber-family (4FF) hyperelastic model for biaxial vessel mechanics.

Strain energy = isotropic neo-Hookean term + four exponential fiber terms
(axial, circumferential, two symmetric diagonals at +/- alpha from the axial
direction). Deformation states are biaxial principal stretches
(lambda_theta, lambda_z); the radial stretch follows from incompressibility,
lambda_r = 1/(lambda_theta*lambda_z). Cauchy stresses use the thin-wall
plane-stress condition sigma_r = 0 to eliminate the pressure:

    sigma_j = lambda_j dW/dlambda_j - lambda_r dW/dlambda_r,  j in {theta, z}

All derivatives here are hand-derived closed forms, not automatic
differentiation, so this module can serve as an independent oracle for the
network-based machinery elsewhere in the package.

Stress unit convention: 0.1 MPa (= 100 kPa) internally; moduli supplied in
kPa must be converted once via ``kpa_to_units``.

The low-level kernels accept an ``xp`` array namespace (numpy by default) so
the same formulas can be evaluated under other array backends without a
second implementation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# 1 internal stress unit = 0.1 MPa = 100 kPa
KPA_PER_UNIT = 100.0

# Fiber exponents k2*(I4-1)^2 beyond this raise instead of silently
# producing inf; configurable per call.
DEFAULT_EXPONENT_CAP = 50.0


class ExponentOverflowError(FloatingPointError):
    """A fiber exponent k2*(I4-1)^2 exceeded the configured cap."""

    def __init__(self, max_exponent: float, cap: float):
        self.max_exponent = float(max_exponent)
        self.cap = float(cap)
        super().__init__(
            f"fiber exponent {self.max_exponent:.3g} exceeds cap {self.cap:.3g}; "
            "stresses would overflow"
        )


def kpa_to_units(value_kpa):
    """Convert kPa to internal stress units (0.1 MPa)."""
    return np.asarray(value_kpa, dtype=float) / KPA_PER_UNIT


def units_to_kpa(value_units):
    """Convert internal stress units (0.1 MPa) to kPa."""
    return np.asarray(value_units, dtype=float) * KPA_PER_UNIT


@dataclass(frozen=True)
class FourFiberParams:
    """4FF constitutive parameters, stiffnesses in internal units (0.1 MPa).

    ``k1``/``k2`` are length-4 arrays ordered (axial, circumferential,
    diagonal, diagonal); the two diagonal entries must be equal. ``alpha_deg``
    is the diagonal-fiber angle from the axial direction, in degrees.
    """

    mu: float
    k1: np.ndarray
    k2: np.ndarray
    alpha_deg: float

    def __post_init__(self):
        object.__setattr__(self, "k1", np.asarray(self.k1, dtype=float))
        object.__setattr__(self, "k2", np.asarray(self.k2, dtype=float))
        if self.k1.shape != (4,) or self.k2.shape != (4,):
            raise ValueError("k1 and k2 must each hold 4 entries")
        if not self.mu > 0:
            raise ValueError("mu must be positive")
        if np.any(self.k1 < 0):
            raise ValueError("k1 entries must be non-negative")
        if np.any(self.k2 <= 0):
            raise ValueError("k2 entries must be positive")
        if not 0.0 < self.alpha_deg < 90.0:
            raise ValueError("alpha_deg must lie strictly between 0 and 90")
        if self.k1[2] != self.k1[3] or self.k2[2] != self.k2[3]:
            raise ValueError("diagonal fiber pair must share k1 and k2")

    @property
    def alpha_rad(self) -> float:
        return math.radians(self.alpha_deg)

    @classmethod
    def from_kpa(cls, mu_kpa, k1_kpa, k2, alpha_deg) -> "FourFiberParams":
        """Build from kPa moduli (k2 and alpha are dimensionless/degrees)."""
        return cls(
            mu=float(mu_kpa) / KPA_PER_UNIT,
            k1=np.asarray(k1_kpa, dtype=float) / KPA_PER_UNIT,
            k2=np.asarray(k2, dtype=float),
            alpha_deg=float(alpha_deg),
        )

    def as_vector(self) -> np.ndarray:
        """Flatten to (mu, k1[0..3], k2[0..3]); alpha is kept separate."""
        return np.concatenate([[self.mu], self.k1, self.k2])


@dataclass(frozen=True)
class BiaxialStretch:
    """Biaxial stretch state; radial stretch fixed by incompressibility."""

    lambda_theta: float
    lambda_z: float

    def __post_init__(self):
        if not (self.lambda_theta > 0 and self.lambda_z > 0):
            raise ValueError("stretches must be positive")

    @property
    def lambda_r(self) -> float:
        return 1.0 / (self.lambda_theta * self.lambda_z)


@dataclass(frozen=True)
class BiaxialStress:
    """Circumferential and axial Cauchy stress, internal units (0.1 MPa)."""

    sigma_theta: float
    sigma_z: float


@dataclass
class StressField:
    """Stresses evaluated on an ordered set of biaxial stretch points."""

    lambda_theta: np.ndarray
    lambda_z: np.ndarray
    sigma_theta: np.ndarray
    sigma_z: np.ndarray
    unit: str = field(default="0.1MPa")

    def __len__(self) -> int:
        return len(self.sigma_theta)


# ---------------------------------------------------------------------------
# xp-generic kernels (vectorized over stretch points; params are scalars /
# length-4 arrays). These are the single source of truth for the formulas.
# ---------------------------------------------------------------------------

def fiber_invariants(alpha_rad, lam_t, lam_z, xp=np):
    """Pseudo-invariants I4_i for the four fiber directions.

    Returns a list [I4_1, I4_2, I4_3, I4_4]: squared stretches along the
    axial, circumferential, and two diagonal fiber directions computed from
    the diagonal right Cauchy-Green tensor diag(lam_r^2, lam_t^2, lam_z^2).
    """
    s2 = xp.sin(alpha_rad) ** 2
    c2 = xp.cos(alpha_rad) ** 2
    i4_diag = c2 * lam_z**2 + s2 * lam_t**2
    return [lam_z**2, lam_t**2, i4_diag, i4_diag]


def fiber_exponents(k2, alpha_rad, lam_t, lam_z, xp=np):
    """The four exponents k2_i*(I4_i - 1)^2 entering the fiber terms."""
    i4 = fiber_invariants(alpha_rad, lam_t, lam_z, xp=xp)
    return [k2[i] * (i4[i] - 1.0) ** 2 for i in range(4)]


def energy_kernel(mu, k1, k2, alpha_rad, lam_t, lam_z, xp=np, exponent_clip=None):
    """Strain energy density W at (lam_t, lam_z), in internal units.

    ``exponent_clip`` optionally clamps the fiber exponents (keeps the value
    finite where a caller will truncate or reject the result anyway).
    """
    lam_r = 1.0 / (lam_t * lam_z)
    i1 = lam_r**2 + lam_t**2 + lam_z**2
    i4 = fiber_invariants(alpha_rad, lam_t, lam_z, xp=xp)
    w = 0.5 * mu * (i1 - 3.0)
    for i in range(4):
        e = k2[i] * (i4[i] - 1.0) ** 2
        if exponent_clip is not None:
            e = xp.minimum(e, exponent_clip)
        w = w + k1[i] / (4.0 * k2[i]) * (xp.exp(e) - 1.0)
    return w


def stress_kernel(mu, k1, k2, alpha_rad, lam_t, lam_z, xp=np, exponent_clip=None):
    """Cauchy stresses (sigma_theta, sigma_z) with the radial stress
    eliminated analytically.

    Each fiber contributes g_i * m_j^2 * lam_j^2 to sigma_j, where
    g_i = k1_i*(I4_i-1)*exp(k2_i*(I4_i-1)^2) = 2 dW/dI4_i and m_j is the
    fiber direction component along axis j. The isotropic part reduces to
    mu*(lam_j^2 - lam_r^2).
    """
    lam_r = 1.0 / (lam_t * lam_z)
    s2 = xp.sin(alpha_rad) ** 2
    c2 = xp.cos(alpha_rad) ** 2
    i4 = fiber_invariants(alpha_rad, lam_t, lam_z, xp=xp)
    m_t2 = (0.0, 1.0, s2, s2)
    m_z2 = (1.0, 0.0, c2, c2)
    sig_t = mu * (lam_t**2 - lam_r**2)
    sig_z = mu * (lam_z**2 - lam_r**2)
    for i in range(4):
        e = k2[i] * (i4[i] - 1.0) ** 2
        if exponent_clip is not None:
            e = xp.minimum(e, exponent_clip)
        g = k1[i] * (i4[i] - 1.0) * xp.exp(e)
        sig_t = sig_t + g * m_t2[i] * lam_t**2
        sig_z = sig_z + g * m_z2[i] * lam_z**2
    return sig_t, sig_z


def _check_exponents(params: FourFiberParams, lam_t, lam_z, cap: float):
    expos = fiber_exponents(params.k2, params.alpha_rad, lam_t, lam_z)
    max_expo = max(float(np.max(e)) for e in expos)
    if max_expo > cap:
        raise ExponentOverflowError(max_expo, cap)


# ---------------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------------

def pseudo_invariants(stretch: BiaxialStretch, alpha_deg: float):
    """Return (I1, I4_1, I4_2, I4_3, I4_4) for a biaxial stretch state."""
    lam_t, lam_z = stretch.lambda_theta, stretch.lambda_z
    lam_r = stretch.lambda_r
    i1 = lam_r**2 + lam_t**2 + lam_z**2
    i4 = fiber_invariants(math.radians(alpha_deg), lam_t, lam_z)
    return (i1, i4[0], i4[1], i4[2], i4[3])


def strain_energy(
    params: FourFiberParams,
    stretch: BiaxialStretch,
    exponent_cap: float = DEFAULT_EXPONENT_CAP,
) -> float:
    """Strain energy density W, internal units (0.1 MPa).

    Raises ExponentOverflowError if any fiber exponent exceeds
    ``exponent_cap`` (default 50), rather than returning inf.
    """
    _check_exponents(params, stretch.lambda_theta, stretch.lambda_z, exponent_cap)
    return float(
        energy_kernel(
            params.mu, params.k1, params.k2, params.alpha_rad,
            stretch.lambda_theta, stretch.lambda_z,
        )
    )


def cauchy_stress(
    params: FourFiberParams,
    stretch: BiaxialStretch,
    exponent_cap: float = DEFAULT_EXPONENT_CAP,
) -> BiaxialStress:
    """Biaxial Cauchy stresses under the thin-wall condition sigma_r = 0."""
    _check_exponents(params, stretch.lambda_theta, stretch.lambda_z, exponent_cap)
    sig_t, sig_z = stress_kernel(
        params.mu, params.k1, params.k2, params.alpha_rad,
        stretch.lambda_theta, stretch.lambda_z,
    )
    return BiaxialStress(sigma_theta=float(sig_t), sigma_z=float(sig_z))


def _grid_arrays(grid) -> tuple[np.ndarray, np.ndarray]:
    """Accept an (n, 2) array of (lambda_theta, lambda_z) or a sequence of
    BiaxialStretch and return the two coordinate arrays."""
    if isinstance(grid, np.ndarray):
        pts = np.asarray(grid, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValueError("grid array must have shape (n, 2)")
        return pts[:, 0], pts[:, 1]
    lam_t = np.array([p.lambda_theta for p in grid], dtype=float)
    lam_z = np.array([p.lambda_z for p in grid], dtype=float)
    return lam_t, lam_z


def stress_grid(
    params: FourFiberParams,
    grid,
    exponent_cap: float = DEFAULT_EXPONENT_CAP,
) -> StressField:
    """Vectorized cauchy_stress over an ordered set of stretch points."""
    lam_t, lam_z = _grid_arrays(grid)
    if lam_t.size == 0:
        raise ValueError("grid must contain at least one point")
    _check_exponents(params, lam_t, lam_z, exponent_cap)
    sig_t, sig_z = stress_kernel(
        params.mu, params.k1, params.k2, params.alpha_rad, lam_t, lam_z
    )
    return StressField(
        lambda_theta=lam_t, lambda_z=lam_z,
        sigma_theta=np.asarray(sig_t), sigma_z=np.asarray(sig_z),
    )


def energy_grid(
    params: FourFiberParams,
    grid,
    exponent_cap: float = DEFAULT_EXPONENT_CAP,
) -> np.ndarray:
    """Vectorized strain_energy over an ordered set of stretch points."""
    lam_t, lam_z = _grid_arrays(grid)
    _check_exponents(params, lam_t, lam_z, exponent_cap)
    return np.asarray(
        energy_kernel(params.mu, params.k1, params.k2, params.alpha_rad, lam_t, lam_z)
    )
