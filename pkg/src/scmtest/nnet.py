"""Dense feedforward nets with exact reverse-mode gradients, plus optimizers.

Everything runs in 64-bit numpy.  A forward pass returns an activation cache
that the matching backward pass consumes; parameter updates mutate the arrays
in place so a model and its optimizer state stay coupled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ContractViolationError, InvalidArgumentError

ACTIVATIONS = ("soft_leaky_relu", "tanh")
INITS = ("fan_in", "unit")


def soft_leaky_relu(t, alpha: float = 0.1):
    """Smooth leaky-linear blend ``alpha*t + (1-alpha)*softplus(t)``.

    Asymptotic slopes are ``alpha`` for t -> -inf and 1 for t -> +inf;
    logaddexp keeps the softplus stable for large |t|.
    """
    t = np.asarray(t, dtype=float)
    return alpha * t + (1.0 - alpha) * np.logaddexp(0.0, t)


def soft_leaky_relu_grad(t, alpha: float = 0.1):
    """Derivative ``alpha + (1-alpha)*sigmoid(t)``; lies in (alpha, 1)."""
    t = np.asarray(t, dtype=float)
    sig = 0.5 * (1.0 + np.tanh(0.5 * t))  # exact, overflow-free sigmoid
    return alpha + (1.0 - alpha) * sig


@dataclass(frozen=True)
class MlpSpec:
    """Layer sizes from input to output, activation and init scheme.

    The output layer is always linear.  init "fan_in" draws weights from
    N(0, 1/fan_in); "unit" draws plain N(0, 1) (used for frozen generator
    nets).  Biases start at zero.
    """

    layer_sizes: tuple[int, ...]
    activation: str = "soft_leaky_relu"
    alpha: float = 0.1
    init: str = "fan_in"

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.layer_sizes)
        if len(sizes) < 2 or any(s < 1 for s in sizes):
            raise InvalidArgumentError(f"need >= 2 layer sizes, all >= 1; got {sizes}")
        if self.activation not in ACTIVATIONS:
            raise InvalidArgumentError(f"unknown activation {self.activation!r}")
        if self.init not in INITS:
            raise InvalidArgumentError(f"unknown init {self.init!r}")
        object.__setattr__(self, "layer_sizes", sizes)

    @property
    def in_size(self) -> int:
        return self.layer_sizes[0]

    @property
    def out_size(self) -> int:
        return self.layer_sizes[-1]


class Mlp:
    """Weights ``W[k]`` of shape (fan_in, fan_out) and biases ``b[k]``."""

    def __init__(self, spec: MlpSpec, weights: list[np.ndarray], biases: list[np.ndarray]):
        self.spec = spec
        self.weights = weights
        self.biases = biases

    def parameters(self) -> list[np.ndarray]:
        """Flat parameter list [W0, b0, W1, b1, ...]; arrays are live views."""
        out: list[np.ndarray] = []
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            out.append(b)
        return out

    def _act(self, z):
        if self.spec.activation == "tanh":
            return np.tanh(z)
        return soft_leaky_relu(z, self.spec.alpha)

    def _act_grad(self, z):
        if self.spec.activation == "tanh":
            return 1.0 - np.tanh(z) ** 2
        return soft_leaky_relu_grad(z, self.spec.alpha)


def init_mlp(spec: MlpSpec, rng: np.random.Generator) -> Mlp:
    weights, biases = [], []
    for fan_in, fan_out in zip(spec.layer_sizes[:-1], spec.layer_sizes[1:]):
        w = rng.standard_normal((fan_in, fan_out))
        if spec.init == "fan_in":
            w /= math.sqrt(fan_in)
        weights.append(w)
        biases.append(np.zeros(fan_out))
    return Mlp(spec, weights, biases)


@dataclass
class ForwardCache:
    """Activations recorded by forward(); consumed once by backward()."""

    mlp: Mlp
    acts: list[np.ndarray]  # layer inputs: acts[0] is x, acts[k] feeds layer k
    pres: list[np.ndarray]  # pre-activations per layer
    squeezed: bool          # input was 1-D


def forward(mlp: Mlp, x) -> tuple[np.ndarray, ForwardCache]:
    """Batched affine/activation composition; final layer linear.

    ``x`` may be a single vector (d,) or a batch (n, d); the output matches.
    """
    arr = np.asarray(x, dtype=float)
    squeezed = arr.ndim == 1
    h = np.atleast_2d(arr)
    if h.ndim != 2 or h.shape[1] != mlp.spec.in_size:
        raise InvalidArgumentError(
            f"input width {arr.shape} incompatible with net input size {mlp.spec.in_size}"
        )
    acts = [h]
    pres = []
    last = len(mlp.weights) - 1
    for k, (w, b) in enumerate(zip(mlp.weights, mlp.biases)):
        z = h @ w + b
        pres.append(z)
        h = z if k == last else mlp._act(z)
        acts.append(h)
    y = acts[-1][0] if squeezed else acts[-1]
    return y, ForwardCache(mlp, acts, pres, squeezed)


def backward(mlp: Mlp, cache: ForwardCache, grad_output) -> tuple[list[np.ndarray], np.ndarray]:
    """Exact reverse-mode gradients of forward().

    Returns (grads, grad_input) with grads ordered like ``mlp.parameters()``.
    Gradients are summed over the batch.
    """
    if cache.mlp is not mlp:
        raise ContractViolationError("cache does not belong to this network")
    g = np.atleast_2d(np.asarray(grad_output, dtype=float))
    if g.shape != cache.pres[-1].shape:
        raise ContractViolationError(
            f"grad_output shape {g.shape} does not match cached output {cache.pres[-1].shape}"
        )
    last = len(mlp.weights) - 1
    grads: list[np.ndarray] = [None] * (2 * len(mlp.weights))  # type: ignore[list-item]
    for k in range(last, -1, -1):
        dz = g if k == last else g * mlp._act_grad(cache.pres[k])
        grads[2 * k] = cache.acts[k].T @ dz
        grads[2 * k + 1] = dz.sum(axis=0)
        g = dz @ mlp.weights[k].T
    grad_input = g[0] if cache.squeezed else g
    return grads, grad_input


@dataclass
class OptimizerState:
    """Moment buffers for sgd / adam / adabelief (beta defaults 0.9/0.999)."""

    kind: str
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)


def init_optimizer(kind: str, params: Sequence[np.ndarray], beta1: float = 0.9,
                   beta2: float = 0.999, eps: float = 1e-8) -> OptimizerState:
    if kind not in ("sgd", "adam", "adabelief"):
        raise InvalidArgumentError(f"unknown optimizer {kind!r}")
    state = OptimizerState(kind, beta1, beta2, eps)
    if kind != "sgd":
        state.m = [np.zeros_like(p) for p in params]
        state.v = [np.zeros_like(p) for p in params]
    return state


def optimizer_step(state: OptimizerState, params: Sequence[np.ndarray],
                   grads: Sequence[np.ndarray], lr: float) -> Sequence[np.ndarray]:
    """One in-place update; returns ``params`` for convenience."""
    if len(params) != len(grads):
        raise ContractViolationError("params/grads length mismatch")
    for p, g in zip(params, grads):
        if p.shape != g.shape:
            raise ContractViolationError(f"shape mismatch {p.shape} vs {g.shape}")
    if state.kind == "sgd":
        for p, g in zip(params, grads):
            p -= lr * g
        return params
    state.step += 1
    t = state.step
    bc1 = 1.0 - state.beta1 ** t
    bc2 = 1.0 - state.beta2 ** t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        if state.kind == "adam":
            v *= state.beta2
            v += (1.0 - state.beta2) * g * g
        else:  # adabelief: second moment of the surprise (g - m)
            diff = g - m
            v *= state.beta2
            v += (1.0 - state.beta2) * diff * diff + state.eps
        p -= lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
    return params


@dataclass(frozen=True)
class LrSchedule:
    """Cosine annealing from initial_lr to zero over ``period`` epochs."""

    initial_lr: float = 0.01
    period: int = 100
    warm_restarts: bool = False

    def __post_init__(self):
        if self.initial_lr <= 0:
            raise InvalidArgumentError("initial_lr must be positive")
        if self.period < 1:
            raise InvalidArgumentError("period must be >= 1")


def lr_at(schedule: LrSchedule, epoch: int) -> float:
    if epoch < 0:
        raise InvalidArgumentError("epoch must be >= 0")
    e = epoch % schedule.period if schedule.warm_restarts else min(epoch, schedule.period)
    return 0.5 * schedule.initial_lr * (1.0 + math.cos(math.pi * e / schedule.period))


def mlp_to_json(mlp: Mlp) -> dict:
    """Spec plus flat row-major parameter arrays."""
    return {
        "layer_sizes": list(mlp.spec.layer_sizes),
        "activation": mlp.spec.activation,
        "alpha": mlp.spec.alpha,
        "init": mlp.spec.init,
        "weights": [w.reshape(-1).tolist() for w in mlp.weights],
        "biases": [b.tolist() for b in mlp.biases],
    }


def mlp_from_json(obj: dict) -> Mlp:
    spec = MlpSpec(tuple(obj["layer_sizes"]), obj["activation"], obj["alpha"], obj["init"])
    weights, biases = [], []
    for k, (fan_in, fan_out) in enumerate(zip(spec.layer_sizes[:-1], spec.layer_sizes[1:])):
        weights.append(np.asarray(obj["weights"][k], dtype=float).reshape(fan_in, fan_out))
        biases.append(np.asarray(obj["biases"][k], dtype=float).reshape(fan_out))
    return Mlp(spec, weights, biases)
