"""Prior-uninformed and model-specific deterministic baselines.

Gaussian-process regression with a squared-exponential kernel (zero prior
mean, one length scale per input dimension, hyperparameters from multi-start
maximization of the log marginal likelihood) serves as the prior-free
comparison. Bounded trust-region least squares on the 4FF stress residuals
serves as the classical model-specific fit; with fewer observations than
model parameters it refuses to run instead of returning an arbitrary point
on the solution manifold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, cholesky
from scipy.optimize import least_squares, minimize

import jax
import jax.numpy as jnp

from .constitutive import FourFiberParams, KPA_PER_UNIT, stress_kernel
from .synthgen import MeasurementSet, ParamRanges

jax.config.update("jax_enable_x64", True)

DEFAULT_JITTER = 1e-10

# Stiffness parameter count quoted for the determinacy check (shear modulus
# plus four fiber modulus/exponent pairs).
N_MODEL_PARAMS = 9


class GpFitError(RuntimeError):
    """Kernel matrix not positive definite even after jitter."""


class UnderDeterminedError(ValueError):
    """Fewer observations than model parameters; the fit is ill-posed."""


# ---------------------------------------------------------------------------
# Gaussian process regression
# ---------------------------------------------------------------------------

@dataclass
class GpModel:
    """Fitted zero-mean GP with squared-exponential kernel."""

    x_train: np.ndarray
    y_train: np.ndarray
    signal_variance: float
    length_scales: np.ndarray
    noise_variance: float
    jitter: float = DEFAULT_JITTER

    def __post_init__(self):
        self.x_train = np.atleast_2d(np.asarray(self.x_train, dtype=float))
        self.y_train = np.asarray(self.y_train, dtype=float)
        self.length_scales = np.asarray(self.length_scales, dtype=float)
        if self.signal_variance <= 0 or np.any(self.length_scales <= 0):
            raise ValueError("kernel hyperparameters must be positive")
        if self.noise_variance < 0:
            raise ValueError("noise variance must be non-negative")
        k = _se_kernel(self.x_train, self.x_train,
                       self.signal_variance, self.length_scales)
        k[np.diag_indices_from(k)] += self.noise_variance + self.jitter
        try:
            self._chol = cho_factor(k, lower=True)
        except np.linalg.LinAlgError as exc:
            raise GpFitError(f"kernel matrix not positive definite: {exc}")
        self._alpha = cho_solve(self._chol, self.y_train)

    def predict(self, x_query, include_noise: bool = False):
        """Posterior mean and SD of the latent function (or of a new noisy
        observation when include_noise is set) at the query points."""
        xq = np.atleast_2d(np.asarray(x_query, dtype=float))
        ks = _se_kernel(xq, self.x_train, self.signal_variance, self.length_scales)
        mean = ks @ self._alpha
        v = cho_solve(self._chol, ks.T)
        var = self.signal_variance - np.einsum("ij,ji->i", ks, v)
        var = np.maximum(var, 0.0)
        if include_noise:
            var = var + self.noise_variance
        return mean, np.sqrt(var)


def _se_kernel(xa, xb, signal_variance, length_scales):
    d = (xa[:, None, :] - xb[None, :, :]) / length_scales
    return signal_variance * np.exp(-0.5 * np.sum(d * d, axis=2))


def _neg_log_marginal(theta, x, y, fixed_noise, jitter):
    """Negative LML and gradient in log-hyperparameter space."""
    n, d = x.shape
    s2 = math.exp(theta[0])
    ells = np.exp(theta[1 : 1 + d])
    noise = fixed_noise if fixed_noise is not None else math.exp(theta[1 + d])
    k_f = _se_kernel(x, x, s2, ells)
    k = k_f.copy()
    k[np.diag_indices_from(k)] += noise + jitter
    try:
        low = cholesky(k, lower=True)
    except np.linalg.LinAlgError:
        return 1e25, np.zeros_like(theta)
    alpha = cho_solve((low, True), y)
    nll = (0.5 * y @ alpha + np.sum(np.log(np.diag(low)))
           + 0.5 * n * math.log(2.0 * math.pi))
    k_inv = cho_solve((low, True), np.eye(n))
    outer = np.outer(alpha, alpha) - k_inv
    grad = np.zeros_like(theta)
    # d k / d log s2 = k_f
    grad[0] = -0.5 * np.sum(outer * k_f)
    diff = x[:, None, :] - x[None, :, :]
    for j in range(d):
        dk = k_f * (diff[:, :, j] / ells[j]) ** 2
        grad[1 + j] = -0.5 * np.sum(outer * dk)
    if fixed_noise is None:
        grad[1 + d] = -0.5 * np.trace(outer) * noise
    return nll, grad


def gp_fit(x, y, noise_variance: float | None = None, n_starts: int = 4,
           jitter: float = DEFAULT_JITTER, seed: int = 0) -> GpModel:
    """Fit kernel hyperparameters by multi-start gradient ascent on the log
    marginal likelihood. ``noise_variance`` fixes the noise term when given;
    otherwise it is optimized alongside the kernel."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[0] < 1:
        raise ValueError("need at least one observation")
    y = np.asarray(y, dtype=float)
    d = x.shape[1]
    rng = np.random.default_rng(seed)
    span = np.maximum(x.max(axis=0) - x.min(axis=0), 1e-2)
    y_var = max(float(np.var(y)), 1e-4)
    best = None
    for start in range(n_starts):
        ell0 = span * (0.2 + 0.6 * rng.uniform(size=d) if start else 0.5)
        theta0 = [math.log(y_var), *np.log(ell0)]
        if noise_variance is None:
            theta0.append(math.log(0.05 * y_var))
        res = minimize(_neg_log_marginal, np.array(theta0), jac=True,
                       args=(x, y, noise_variance, jitter), method="L-BFGS-B",
                       bounds=[(-12.0, 12.0)] * len(theta0))
        if best is None or res.fun < best.fun:
            best = res
    s2 = math.exp(best.x[0])
    ells = np.exp(best.x[1 : 1 + d])
    noise = noise_variance if noise_variance is not None else math.exp(best.x[1 + d])
    return GpModel(x_train=x, y_train=y, signal_variance=s2,
                   length_scales=ells, noise_variance=noise, jitter=jitter)


def gp_regress(mset: MeasurementSet, query_points,
               noise_variance: float | None = None,
               include_noise: bool = False, seed: int = 0):
    """Independent GP per observed stress component.

    ``query_points``: (m, 2) stretch points, of which 1d measurement sets
    (constant lambda_z) use only the first column. Returns a dict with
    per-component (mean, sd), entries None when a component has no data.
    """
    if len(mset) < 1:
        raise ValueError("need at least one observation")
    query = np.atleast_2d(np.asarray(query_points, dtype=float))
    one_dim = np.ptp(mset.lambda_z) < 1e-12
    cols = slice(0, 1) if one_dim else slice(0, 2)
    out = {}
    for name, values, present in (
        ("sigma_theta", mset.sigma_theta, mset.has_theta),
        ("sigma_z", mset.sigma_z, mset.has_z),
    ):
        if not np.any(present):
            out[name] = None
            continue
        x = mset.points[present][:, cols]
        model = gp_fit(x, values[present], noise_variance=noise_variance,
                       seed=seed)
        out[name] = model.predict(query[:, cols], include_noise=include_noise)
    return out


# ---------------------------------------------------------------------------
# Nonlinear least-squares 4FF fit
# ---------------------------------------------------------------------------

@dataclass
class FitResult:
    """Outcome of a bounded least-squares fit."""

    params: FourFiberParams
    residual_norm: float
    iterations: int
    converged: bool
    message: str = ""


# Free optimization vector: (mu, k1_axial, k1_circ, k1_diag, k2_axial,
# k2_circ, k2_diag, alpha_deg), diagonal pair tied, internal units.
_FIT_KEYS = ("mu", "k1_axial", "k1_circ", "k1_diag",
             "k2_axial", "k2_circ", "k2_diag", "alpha")


def _vector_from_params(p: FourFiberParams) -> np.ndarray:
    return np.array([p.mu, p.k1[0], p.k1[1], p.k1[2],
                     p.k2[0], p.k2[1], p.k2[2], p.alpha_deg])


def _params_from_vector(v) -> FourFiberParams:
    v = np.asarray(v, dtype=float)
    return FourFiberParams(
        mu=v[0], k1=np.array([v[1], v[2], v[3], v[3]]),
        k2=np.array([v[4], v[5], v[6], v[6]]), alpha_deg=v[7])


def _fit_bounds(ranges: ParamRanges):
    lo, hi = [], []
    for key in _FIT_KEYS:
        a, b = ranges.bounds[key]
        scale = KPA_PER_UNIT if key.startswith(("mu", "k1")) else 1.0
        lo.append(a / scale)
        hi.append(b / scale)
    return np.array(lo), np.array(hi)


def nonlinear_fit(data: MeasurementSet, init: FourFiberParams,
                  ranges: ParamRanges | None = None,
                  weighting: str = "none",
                  max_nfev: int = 2000) -> FitResult:
    """Bounded trust-region least squares on the observed stress residuals.

    Raises UnderDeterminedError when the observation count is below the
    model's stiffness parameter count (9). ``weighting="inverse-stress"``
    divides each residual by max(|observed|, 0.1) so large stresses do not
    dominate the objective.
    """
    if weighting not in ("none", "inverse-stress"):
        raise ValueError("weighting must be 'none' or 'inverse-stress'")
    n_obs = data.n_observations
    if n_obs < N_MODEL_PARAMS:
        raise UnderDeterminedError(
            f"{n_obs} observations for {N_MODEL_PARAMS} model parameters; "
            "the system is under-determined")
    ranges = ranges or ParamRanges.default()
    lo, hi = _fit_bounds(ranges)
    x0 = np.clip(_vector_from_params(init), lo + 1e-12, hi - 1e-12)

    m_t, m_z = data.has_theta, data.has_z
    lam_t = jnp.asarray(data.lambda_theta)
    lam_z = jnp.asarray(data.lambda_z)
    obs_t = jnp.asarray(np.where(m_t, data.sigma_theta, 0.0))
    obs_z = jnp.asarray(np.where(m_z, data.sigma_z, 0.0))
    if weighting == "inverse-stress":
        w_t = 1.0 / np.maximum(np.abs(np.where(m_t, data.sigma_theta, 1.0)), 0.1)
        w_z = 1.0 / np.maximum(np.abs(np.where(m_z, data.sigma_z, 1.0)), 0.1)
    else:
        w_t = np.ones(len(data))
        w_z = np.ones(len(data))
    sel_t = np.flatnonzero(m_t)
    sel_z = np.flatnonzero(m_z)
    w_t_j, w_z_j = jnp.asarray(w_t), jnp.asarray(w_z)

    def residual_j(v):
        mu = v[0]
        k1 = jnp.stack([v[1], v[2], v[3], v[3]])
        k2 = jnp.stack([v[4], v[5], v[6], v[6]])
        alpha = jnp.deg2rad(v[7])
        sig_t, sig_z = stress_kernel(mu, k1, k2, alpha, lam_t, lam_z, xp=jnp,
                                     exponent_clip=80.0)
        r_t = (w_t_j * (sig_t - obs_t))[sel_t]
        r_z = (w_z_j * (sig_z - obs_z))[sel_z]
        return jnp.concatenate([r_t, r_z])

    res_fn = jax.jit(residual_j)
    jac_fn = jax.jit(jax.jacfwd(residual_j))
    result = least_squares(
        lambda v: np.asarray(res_fn(jnp.asarray(v))),
        x0,
        jac=lambda v: np.asarray(jac_fn(jnp.asarray(v))),
        bounds=(lo, hi), method="trf", max_nfev=max_nfev)
    return FitResult(
        params=_params_from_vector(result.x),
        residual_norm=float(np.linalg.norm(result.fun)),
        iterations=int(result.njev if result.njev is not None else result.nfev),
        converged=bool(result.success),
        message=str(result.message))
