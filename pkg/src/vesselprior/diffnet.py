"""Differentiable dense-network core.

Plain fully-connected networks (affine layers, smooth hidden nonlinearity,
identity output) with exact reverse-mode gradients with respect to both
parameters and inputs, including nested differentiation: parameter gradients
of quantities built from input gradients, as required by gradient-penalty
terms and by generators whose stresses are derivatives of a predicted energy.

Differentiation is delegated to JAX on CPU in double precision; this module
pins the conventions (parameter layout, initialization, activations, Adam
update) and provides the checkpoint format. Hidden layers use tanh: nested
differentiation needs a C^2 activation, which rules out piecewise-linear
choices.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

import jax
import jax.numpy as jnp

from . import io

jax.config.update("jax_enable_x64", True)

ACTIVATIONS = {
    "tanh": jnp.tanh,
    "identity": lambda x: x,
}


class NonFiniteGradientError(FloatingPointError):
    """An optimizer step received a non-finite gradient."""


@dataclass
class DenseNet:
    """Dense network: ``widths`` chain, per-layer (W, b) pairs, tanh hidden
    activations and identity output by default."""

    widths: tuple
    params: list
    hidden_activation: str = "tanh"

    def __post_init__(self):
        self.widths = tuple(int(w) for w in self.widths)
        if len(self.widths) < 2:
            raise ValueError("need at least input and output widths")
        if self.hidden_activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.hidden_activation!r}")
        if len(self.params) != len(self.widths) - 1:
            raise ValueError("one (W, b) pair per layer required")
        for i, (w, b) in enumerate(self.params):
            if w.shape != (self.widths[i], self.widths[i + 1]) or b.shape != (self.widths[i + 1],):
                raise ValueError(f"layer {i} parameter shapes inconsistent with widths")
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise ValueError(f"layer {i} parameters must be finite")

    @property
    def in_width(self) -> int:
        return self.widths[0]

    @property
    def out_width(self) -> int:
        return self.widths[-1]

    def n_params(self) -> int:
        return sum(w.size + b.size for w, b in self.params)

    def pytree(self):
        """Parameters as a tuple-of-pairs pytree of jnp arrays."""
        return tuple((jnp.asarray(w), jnp.asarray(b)) for w, b in self.params)

    def with_params(self, pytree) -> "DenseNet":
        params = [(np.asarray(w), np.asarray(b)) for w, b in pytree]
        return replace(self, params=params)


def init_dense(widths, rng: np.random.Generator,
               hidden_activation: str = "tanh") -> DenseNet:
    """Glorot-uniform weights, zero biases."""
    params = []
    for fan_in, fan_out in zip(widths[:-1], widths[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        w = rng.uniform(-limit, limit, size=(fan_in, fan_out))
        params.append((w, np.zeros(fan_out)))
    return DenseNet(widths=tuple(widths), params=params,
                    hidden_activation=hidden_activation)


def dense_apply(params, x, hidden_activation: str = "tanh"):
    """Functional forward pass; traceable by jax transforms.

    ``x`` may be a single input (in_width,) or a batch (n, in_width).
    """
    act = ACTIVATIONS[hidden_activation]
    for w, b in params[:-1]:
        x = act(x @ w + b)
    w, b = params[-1]
    return x @ w + b


def forward(net: DenseNet, x) -> np.ndarray:
    """Evaluate the network on one input vector or a batch of rows."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != net.in_width:
        raise ValueError(f"input width {x.shape[-1]} != expected {net.in_width}")
    return np.asarray(dense_apply(net.pytree(), jnp.asarray(x),
                                  net.hidden_activation))


def grad_params(loss_fn, params):
    """Gradient of a scalar ``loss_fn(params)`` with respect to a parameter
    pytree. The loss must be built from jax-traceable operations."""
    return jax.grad(loss_fn)(params)


def flatten_pytree(tree) -> np.ndarray:
    leaves = jax.tree_util.tree_leaves(tree)
    return np.concatenate([np.asarray(leaf).ravel() for leaf in leaves])


def flat_gradient(loss_fn, params) -> np.ndarray:
    """grad_params flattened to a single vector (reporting/testing helper)."""
    return flatten_pytree(grad_params(loss_fn, params))


def grad_input(net: DenseNet, x) -> np.ndarray:
    """Gradient of a scalar-output net at input x; Jacobian if the output is
    a vector. Composable: the same computation is available inside traced
    losses via input_gradient_fn, so parameter gradients can flow through it."""
    x = jnp.asarray(x, dtype=float)
    fn = input_gradient_fn(net.hidden_activation, scalar=net.out_width == 1)
    return np.asarray(fn(net.pytree(), x))


def input_gradient_fn(hidden_activation: str = "tanh", scalar: bool = True):
    """Return g(params, x): the input-gradient (scalar output) or input-
    Jacobian of a dense net, differentiable in ``params``."""
    if scalar:
        def scalar_net(params, x):
            return dense_apply(params, x, hidden_activation)[0]
        return jax.grad(scalar_net, argnums=1)

    def vec_net(params, x):
        return dense_apply(params, x, hidden_activation)
    return jax.jacfwd(vec_net, argnums=1)


# ---------------------------------------------------------------------------
# Adam
# ---------------------------------------------------------------------------

@dataclass
class AdamState:
    """First/second moment accumulators plus hyperparameters."""

    m: object
    v: object
    step: int = 0
    lr: float = 1e-4
    beta1: float = 0.5
    beta2: float = 0.9
    eps: float = 1e-8


def init_adam(params, lr: float = 1e-4, beta1: float = 0.5,
              beta2: float = 0.9, eps: float = 1e-8) -> AdamState:
    zeros = jax.tree_util.tree_map(jnp.zeros_like, params)
    zeros2 = jax.tree_util.tree_map(jnp.zeros_like, params)
    return AdamState(m=zeros, v=zeros2, step=0, lr=lr, beta1=beta1,
                     beta2=beta2, eps=eps)


def adam_update(params, grads, m, v, step, lr, beta1, beta2, eps):
    """One bias-corrected Adam update as a pure function (jit-safe).

    ``step`` is the 1-based step count after this update.
    """
    m = jax.tree_util.tree_map(lambda a, g: beta1 * a + (1 - beta1) * g, m, grads)
    v = jax.tree_util.tree_map(lambda a, g: beta2 * a + (1 - beta2) * g * g, v, grads)
    bc1 = 1 - beta1 ** step
    bc2 = 1 - beta2 ** step
    params = jax.tree_util.tree_map(
        lambda p, mm, vv: p - lr * (mm / bc1) / (jnp.sqrt(vv / bc2) + eps),
        params, m, v)
    return params, m, v


def adam_step(state: AdamState, params, grads):
    """Apply one Adam step; raises NonFiniteGradientError on bad gradients."""
    flat = flatten_pytree(grads)
    if not np.all(np.isfinite(flat)):
        raise NonFiniteGradientError(
            f"non-finite gradient at step {state.step + 1}")
    step = state.step + 1
    new_params, m, v = adam_update(params, grads, state.m, state.v, step,
                                   state.lr, state.beta1, state.beta2, state.eps)
    new_state = AdamState(m=m, v=v, step=step, lr=state.lr, beta1=state.beta1,
                          beta2=state.beta2, eps=state.eps)
    return new_params, new_state


# ---------------------------------------------------------------------------
# Checkpoints
# ---------------------------------------------------------------------------

def save_dense(path, net: DenseNet) -> None:
    """Write a checksummed checkpoint (see io module for the container)."""
    arrays = {}
    for i, (w, b) in enumerate(net.params):
        arrays[f"w{i}"] = np.asarray(w, dtype=float)
        arrays[f"b{i}"] = np.asarray(b, dtype=float)
    meta = {
        "kind": "dense-net",
        "widths": list(net.widths),
        "hidden_activation": net.hidden_activation,
    }
    io.save_arrays(path, meta, arrays)


def load_dense(path) -> DenseNet:
    """Load a checkpoint; checksum mismatches raise io.ChecksumError."""
    meta, arrays = io.load_arrays(path)
    if meta.get("kind") != "dense-net":
        raise IOError(f"{path}: not a dense-net checkpoint")
    widths = tuple(meta["widths"])
    params = [(arrays[f"w{i}"], arrays[f"b{i}"]) for i in range(len(widths) - 1)]
    return DenseNet(widths=widths, params=params,
                    hidden_activation=meta["hidden_activation"])
