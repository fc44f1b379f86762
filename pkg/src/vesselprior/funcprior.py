"""Adversarially trained functional prior over stress-stretch relations.

The generator is an operator network: a branch net encodes a Gaussian latent
vector, a trunk net encodes the stretch coordinates, and their outputs
combine by inner product. The combined value feeds an exponential output
form, exp(.) - 1, which matches the exponential growth of the target family
and keeps the inner product O(1). Three output modes:

* ``direct-stress-1d``  - scalar circumferential stress on a 1d line layout.
* ``direct-stress-2d``  - both stresses; the latent coefficients are split
  into halves, one half per stress component, against the matching halves of
  the trunk output.
* ``energy-2d``         - the exponential form predicts the strain-energy
  surface W(lambda_theta, lambda_z) with incompressibility and the thin-wall
  elimination already embedded; stresses follow as
  sigma_j = lambda_j * dW/dlambda_j, differentiating through the trunk.

A fully-connected critic scores stress representations; training minimizes
the Wasserstein losses with a gradient penalty on interpolates between real
and generated representations.
"""

from __future__ import annotations

import json
import os
import tempfile
import time
from dataclasses import dataclass

import numpy as np

import jax
import jax.numpy as jnp

from . import io
from .diffnet import DenseNet, adam_update, dense_apply, init_dense, load_dense, save_dense
from .synthgen import LAYOUT_1D, LAYOUT_2D, PriorDataset, SensorLayout

MODE_DIRECT_1D = "direct-stress-1d"
MODE_DIRECT_2D = "direct-stress-2d"
MODE_ENERGY_2D = "energy-2d"
MODES = (MODE_DIRECT_1D, MODE_DIRECT_2D, MODE_ENERGY_2D)

# Latent dimensionality defaults: 50 for the 1d generator, 100 for 2d.
DEFAULT_LATENT = {MODE_DIRECT_1D: 50, MODE_DIRECT_2D: 100, MODE_ENERGY_2D: 100}


class TrainingDivergedError(RuntimeError):
    """A loss became non-finite during adversarial training."""

    def __init__(self, epoch: int, component: str):
        self.epoch = epoch
        self.component = component
        super().__init__(f"non-finite {component} loss at epoch {epoch}")


@dataclass
class DeepOnetGenerator:
    """Branch/trunk operator network with an output mode tag."""

    branch: DenseNet
    trunk: DenseNet
    mode: str

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown generator mode {self.mode!r}")
        if self.branch.out_width != self.trunk.out_width:
            raise ValueError("branch and trunk output widths must match")
        want_in = 1 if self.mode == MODE_DIRECT_1D else 2
        if self.trunk.in_width != want_in:
            raise ValueError(
                f"mode {self.mode} needs trunk input width {want_in}, "
                f"got {self.trunk.in_width}")
        if self.mode == MODE_DIRECT_2D and self.branch.out_width % 2:
            raise ValueError("direct 2d mode needs an even coefficient count")

    @property
    def latent_dim(self) -> int:
        return self.branch.in_width


@dataclass
class GeneratedField:
    """Generator output on a set of points; absent components are None."""

    sigma_theta: np.ndarray
    sigma_z: np.ndarray | None = None
    energy: np.ndarray | None = None


@dataclass
class GanConfig:
    """Adversarial training settings (defaults are desk scale)."""

    beta_reg: float = 0.1
    epochs: int = 20000
    n_critic: int = 5
    batch_size: int = 50
    lr: float = 1e-4
    beta1: float = 0.5
    beta2: float = 0.9
    latent_dim: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.beta_reg < 0:
            raise ValueError("beta_reg must be >= 0")
        if self.epochs < 1 or self.n_critic < 1 or self.batch_size < 1:
            raise ValueError("epochs, n_critic and batch_size must be >= 1")

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in (
            "beta_reg", "epochs", "n_critic", "batch_size", "lr",
            "beta1", "beta2", "latent_dim", "seed")}


def build_generator(mode: str, rng: np.random.Generator,
                    latent_dim: int | None = None, n_coeff: int = 50,
                    hidden=(64, 64, 64)) -> DeepOnetGenerator:
    """Fresh generator with the standard widths for the given mode."""
    if mode not in MODES:
        raise ValueError(f"unknown generator mode {mode!r}")
    d = latent_dim or DEFAULT_LATENT[mode]
    trunk_in = 1 if mode == MODE_DIRECT_1D else 2
    branch = init_dense([d, *hidden, n_coeff], rng)
    trunk = init_dense([trunk_in, *hidden, n_coeff], rng)
    return DeepOnetGenerator(branch=branch, trunk=trunk, mode=mode)


def build_discriminator(layout: SensorLayout, rng: np.random.Generator,
                        hidden=None) -> DenseNet:
    """Critic sized to the layout's stress representation: narrow hidden
    layers for 1d lines, wide for 2d grids."""
    if hidden is None:
        hidden = (64, 64, 64) if layout.kind == LAYOUT_1D else (250, 250, 250)
    return init_dense([layout.representation_length, *hidden, 1], rng)


# ---------------------------------------------------------------------------
# Field evaluation (single source of the mode formulas)
# ---------------------------------------------------------------------------

def _trunk_features(trunk_py, activation, x, need_jacobian):
    """Trunk outputs T (n, p) and, when needed, input Jacobians (n, p, d)."""
    t = dense_apply(trunk_py, x, activation)
    jac = None
    if need_jacobian:
        jac = jax.vmap(jax.jacfwd(lambda q: dense_apply(trunk_py, q, activation)))(x)
    return t, jac


def _fields_from_bt(mode, points, b, t, t_jac):
    """Fields for a batch of branch outputs b (n_b, p) against trunk outputs
    t (n_g, p). Returns (sigma_theta, sigma_z, energy), each (n_b, n_g) or
    None. ``points`` is the (n_g, 2) stretch array (energy mode only)."""
    if mode == MODE_DIRECT_1D:
        return jnp.exp(b @ t.T) - 1.0, None, None
    if mode == MODE_DIRECT_2D:
        half = t.shape[1] // 2
        sig_t = jnp.exp(b[:, :half] @ t[:, :half].T) - 1.0
        sig_z = jnp.exp(b[:, half:] @ t[:, half:].T) - 1.0
        return sig_t, sig_z, None
    inner = b @ t.T                      # (n_b, n_g)
    expw = jnp.exp(inner)                # dW/dinner; also W + 1
    dinner = jnp.einsum("np,gpd->ngd", b, t_jac)
    dw = expw[:, :, None] * dinner
    sig = points[None, :, :] * dw        # sigma_j = lambda_j dW/dlambda_j
    return sig[:, :, 0], sig[:, :, 1], expw - 1.0


def _rep_from_fields(sig_t, sig_z):
    if sig_z is None:
        return sig_t
    return jnp.concatenate([sig_t, sig_z], axis=1)


def _gen_rep_batch(gen_py, mode, activation, trunk_x, points, xis):
    """Stress representations for a latent batch, with generator parameters
    free (used inside traced training losses)."""
    branch_py, trunk_py = gen_py
    b = dense_apply(branch_py, xis, activation)
    t, jac = _trunk_features(trunk_py, activation, trunk_x,
                             mode == MODE_ENERGY_2D)
    sig_t, sig_z, _ = _fields_from_bt(mode, points, b, t, jac)
    return _rep_from_fields(sig_t, sig_z)


def field_fn(gen: DeepOnetGenerator, points):
    """Pure function xi -> (sigma_theta, sigma_z, energy) at fixed points.

    Trunk features are baked in as constants (the trunk does not depend on
    the latent), so the returned function is cheap and jax-traceable; use it
    to build posterior densities or to push sample batches.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("points must have shape (n, 2)")
    x = jnp.asarray(pts[:, :1] if gen.mode == MODE_DIRECT_1D else pts)
    t, jac = _trunk_features(gen.trunk.pytree(), gen.trunk.hidden_activation,
                             x, gen.mode == MODE_ENERGY_2D)
    branch_py = gen.branch.pytree()
    act = gen.branch.hidden_activation
    mode = gen.mode
    pts_j = jnp.asarray(pts)

    def fn(xi):
        b = dense_apply(branch_py, xi, act)
        single = b.ndim == 1
        if single:
            b = b[None, :]
        sig_t, sig_z, energy = _fields_from_bt(mode, pts_j, b, t, jac)
        if single:
            sig_t = sig_t[0]
            sig_z = None if sig_z is None else sig_z[0]
            energy = None if energy is None else energy[0]
        return sig_t, sig_z, energy

    return fn


def generate(gen: DeepOnetGenerator, xi, layout: SensorLayout) -> GeneratedField:
    """Evaluate the generator at latent ``xi`` (one vector or a batch) on a
    sensor layout."""
    xi = np.asarray(xi, dtype=float)
    if xi.shape[-1] != gen.latent_dim:
        raise ValueError(f"latent width {xi.shape[-1]} != {gen.latent_dim}")
    if gen.mode == MODE_DIRECT_1D and layout.kind != LAYOUT_1D:
        raise ValueError("1d generator needs a 1d layout")
    if gen.mode != MODE_DIRECT_1D and layout.kind != LAYOUT_2D:
        raise ValueError("2d generator needs a 2d layout")
    fn = field_fn(gen, layout.points)
    sig_t, sig_z, energy = fn(jnp.asarray(xi))
    return GeneratedField(
        sigma_theta=np.asarray(sig_t),
        sigma_z=None if sig_z is None else np.asarray(sig_z),
        energy=None if energy is None else np.asarray(energy),
    )


def representation(gen: DeepOnetGenerator, xi, layout: SensorLayout) -> np.ndarray:
    """Flat stress representation as fed to the discriminator."""
    out = generate(gen, xi, layout)
    if out.sigma_z is None:
        return out.sigma_theta
    return np.concatenate([out.sigma_theta, out.sigma_z], axis=-1)


def discriminator_score(disc: DenseNet, rep) -> np.ndarray:
    """Critic score; scalar for one representation, vector for a batch."""
    rep = np.asarray(rep, dtype=float)
    if rep.shape[-1] != disc.in_width:
        raise ValueError(f"representation width {rep.shape[-1]} != {disc.in_width}")
    out = dense_apply(disc.pytree(), jnp.asarray(rep), disc.hidden_activation)
    return np.asarray(out)[..., 0] if rep.ndim > 1 else float(np.asarray(out)[0])


# ---------------------------------------------------------------------------
# Losses
# ---------------------------------------------------------------------------

def _score_batch(disc_py, activation, reps):
    return dense_apply(disc_py, reps, activation)[:, 0]

def _penalty(disc_py, activation, interp):
    def score_one(r):
        return dense_apply(disc_py, r, activation)[0]
    grads = jax.vmap(jax.grad(score_one))(interp)
    norms = jnp.sqrt(jnp.sum(grads**2, axis=1))
    return jnp.mean((norms - 1.0) ** 2)


def generator_loss(gen: DeepOnetGenerator, disc: DenseNet, xi_batch,
                   layout: SensorLayout) -> float:
    """Negative mean critic score on generated representations."""
    reps = representation(gen, np.atleast_2d(xi_batch), layout)
    return float(-np.mean(discriminator_score(disc, reps)))


def discriminator_loss(gen: DeepOnetGenerator, disc: DenseNet, xi_batch,
                       real_batch, layout: SensorLayout,
                       beta_reg: float = 0.1,
                       rng: np.random.Generator | None = None) -> float:
    """Wasserstein critic loss with gradient penalty.

    E[D(fake)] - E[D(real)] + beta_reg * E[(||grad D(interp)||_2 - 1)^2],
    interpolates drawn uniformly on the segments between paired real and
    fake representations.
    """
    xi_batch = np.atleast_2d(xi_batch)
    real_batch = np.atleast_2d(np.asarray(real_batch, dtype=float))
    if len(xi_batch) != len(real_batch):
        raise ValueError("real and latent batch sizes differ")
    rng = rng or np.random.default_rng(0)
    fake = representation(gen, xi_batch, layout)
    u = rng.uniform(size=(len(xi_batch), 1))
    interp = u * real_batch + (1.0 - u) * fake
    wass = float(np.mean(discriminator_score(disc, fake))
                 - np.mean(discriminator_score(disc, real_batch)))
    pen = float(_penalty(disc.pytree(), disc.hidden_activation,
                         jnp.asarray(interp)))
    return wass + beta_reg * pen


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------

@dataclass
class TrainedPrior:
    """Training artifact: generator, critic, and per-epoch loss history
    (columns: epoch, loss_g, loss_d, penalty)."""

    generator: DeepOnetGenerator
    discriminator: DenseNet
    history: np.ndarray
    config: GanConfig
    layout: SensorLayout
    dataset_checksum: str | None = None


def train(dataset: PriorDataset, config: GanConfig,
          mode: str | None = None,
          progress: bool = False) -> TrainedPrior:
    """Adversarial training on a prior dataset.

    One epoch = ``n_critic`` critic updates followed by one generator
    update. Fully deterministic given ``config.seed``. Raises
    TrainingDivergedError if a loss goes non-finite.
    """
    layout = dataset.layout
    if mode is None:
        mode = MODE_DIRECT_1D if layout.kind == LAYOUT_1D else MODE_ENERGY_2D
    rng = np.random.default_rng(config.seed)
    gen = build_generator(mode, rng, latent_dim=config.latent_dim)
    disc = build_discriminator(layout, rng)
    if disc.in_width != layout.representation_length:
        raise ValueError("discriminator width does not match layout")

    act = gen.branch.hidden_activation
    dact = disc.hidden_activation
    trunk_x = jnp.asarray(layout.trunk_inputs())
    points = jnp.asarray(layout.points)
    data = jnp.asarray(dataset.samples)
    beta_reg = config.beta_reg
    adam_args = (config.lr, config.beta1, config.beta2, 1e-8)

    def d_loss(disc_py, gen_py, xis, real, u):
        fake = _gen_rep_batch(gen_py, mode, act, trunk_x, points, xis)
        interp = u[:, None] * real + (1.0 - u[:, None]) * fake
        wass = (jnp.mean(_score_batch(disc_py, dact, fake))
                - jnp.mean(_score_batch(disc_py, dact, real)))
        pen = _penalty(disc_py, dact, interp)
        return wass + beta_reg * pen, (wass, pen)

    def g_loss(gen_py, disc_py, xis):
        fake = _gen_rep_batch(gen_py, mode, act, trunk_x, points, xis)
        return -jnp.mean(_score_batch(disc_py, dact, fake))

    @jax.jit
    def d_step(disc_py, m, v, step, gen_py, xis, real, u):
        (loss, (wass, pen)), grads = jax.value_and_grad(d_loss, has_aux=True)(
            disc_py, gen_py, xis, real, u)
        disc_py, m, v = adam_update(disc_py, grads, m, v, step, *adam_args)
        return disc_py, m, v, loss, pen

    @jax.jit
    def g_step(gen_py, m, v, step, disc_py, xis):
        loss, grads = jax.value_and_grad(g_loss)(gen_py, disc_py, xis)
        gen_py, m, v = adam_update(gen_py, grads, m, v, step, *adam_args)
        return gen_py, m, v, loss

    gen_py = (gen.branch.pytree(), gen.trunk.pytree())
    disc_py = disc.pytree()
    zeros = lambda tree: jax.tree_util.tree_map(jnp.zeros_like, tree)
    dm, dv = zeros(disc_py), zeros(disc_py)
    gm, gv = zeros(gen_py), zeros(gen_py)

    n = dataset.n_samples
    batch = config.batch_size
    d_latent = gen.latent_dim
    history = np.empty((config.epochs, 4))
    t_start = time.time()
    for epoch in range(1, config.epochs + 1):
        for _ in range(config.n_critic):
            idx = rng.integers(0, n, size=batch)
            xis = jnp.asarray(rng.standard_normal((batch, d_latent)))
            u = jnp.asarray(rng.uniform(size=batch))
            disc_py, dm, dv, loss_d, pen = d_step(
                disc_py, dm, dv, epoch, gen_py, xis, data[idx], u)
        xis = jnp.asarray(rng.standard_normal((batch, d_latent)))
        gen_py, gm, gv, loss_g = g_step(gen_py, gm, gv, epoch, disc_py, xis)
        lg, ld, lp = float(loss_g), float(loss_d), float(pen)
        if not np.isfinite(lg):
            raise TrainingDivergedError(epoch, "generator")
        if not (np.isfinite(ld) and np.isfinite(lp)):
            raise TrainingDivergedError(epoch, "discriminator")
        history[epoch - 1] = (epoch, lg, ld, lp)
        if progress and (epoch % max(1, config.epochs // 10) == 0):
            print(f"  epoch {epoch}/{config.epochs}: loss_g={lg:+.4f} "
                  f"loss_d={ld:+.4f} penalty={lp:.4f} "
                  f"[{time.time() - t_start:.0f}s]", flush=True)

    gen = DeepOnetGenerator(
        branch=gen.branch.with_params(gen_py[0]),
        trunk=gen.trunk.with_params(gen_py[1]),
        mode=mode)
    disc = disc.with_params(disc_py)
    return TrainedPrior(generator=gen, discriminator=disc, history=history,
                        config=config, layout=layout)


def write_history_csv(path, history: np.ndarray) -> None:
    lines = ["epoch,loss_g,loss_d,penalty"]
    for row in history:
        lines.append(f"{int(row[0])},{float(row[1])!r},"
                     f"{float(row[2])!r},{float(row[3])!r}")
    io.atomic_write_text(path, "\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# Checkpoint directory: branch/trunk/critic nets + manifest
# ---------------------------------------------------------------------------

def save_prior(directory, trained: TrainedPrior,
               dataset_checksum: str | None = None) -> None:
    """Persist a trained prior (three net checkpoints + manifest JSON)."""
    os.makedirs(directory, exist_ok=True)
    save_dense(os.path.join(directory, "branch.net"), trained.generator.branch)
    save_dense(os.path.join(directory, "trunk.net"), trained.generator.trunk)
    save_dense(os.path.join(directory, "critic.net"), trained.discriminator)
    write_history_csv(os.path.join(directory, "loss_history.csv"), trained.history)
    manifest = {
        "mode": trained.generator.mode,
        "latent_dim": trained.generator.latent_dim,
        "layout": trained.layout.to_dict(),
        "config": trained.config.to_dict(),
        "dataset_checksum": dataset_checksum or trained.dataset_checksum,
    }
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    with os.fdopen(fd, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    os.replace(tmp, os.path.join(directory, "manifest.json"))


def load_prior(directory):
    """Load a trained prior; returns (generator, discriminator, manifest)."""
    with open(os.path.join(directory, "manifest.json")) as fh:
        manifest = json.load(fh)
    branch = load_dense(os.path.join(directory, "branch.net"))
    trunk = load_dense(os.path.join(directory, "trunk.net"))
    disc = load_dense(os.path.join(directory, "critic.net"))
    gen = DeepOnetGenerator(branch=branch, trunk=trunk, mode=manifest["mode"])
    return gen, disc, manifest
