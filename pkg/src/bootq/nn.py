"""Minimal dense-network core: forward pass, analytic gradients, Smooth-L1
loss, and a bias-corrected Adam optimizer.

Everything runs in float64 numpy so training is bit-reproducible on a
single machine. Layers are plain (weight, bias, activation) records; the
only supported activations are relu and identity.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

ACTIVATIONS = ("relu", "identity")

# Adam defaults; the learning rate always comes from the caller.
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass
class Layer:
    """One dense layer: y = act(W @ x + b), weight shape (out, in)."""

    weight: np.ndarray
    bias: np.ndarray
    activation: str = "relu"

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.weight.ndim != 2 or self.bias.ndim != 1:
            raise ValueError("weight must be 2-D (out, in) and bias 1-D (out,)")
        if self.weight.shape[0] != self.bias.shape[0]:
            raise ValueError(
                f"bias length {self.bias.shape[0]} does not match "
                f"weight rows {self.weight.shape[0]}"
            )

    @property
    def out_dim(self) -> int:
        return self.weight.shape[0]

    @property
    def in_dim(self) -> int:
        return self.weight.shape[1]


@dataclass
class DenseNet:
    """A feedforward stack of dense layers with chained dimensions."""

    layers: list[Layer]

    def __post_init__(self):
        if not self.layers:
            raise ValueError("DenseNet needs at least one layer")
        for prev, nxt in zip(self.layers, self.layers[1:]):
            if prev.out_dim != nxt.in_dim:
                raise ValueError(
                    f"layer dimensions do not chain: {prev.out_dim} -> {nxt.in_dim}"
                )

    @property
    def in_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def out_dim(self) -> int:
        return self.layers[-1].out_dim

    def parameters(self) -> list[np.ndarray]:
        """All parameter arrays, layer by layer (weight then bias)."""
        out = []
        for layer in self.layers:
            out.append(layer.weight)
            out.append(layer.bias)
        return out

    def copy(self) -> "DenseNet":
        return DenseNet(
            [Layer(l.weight.copy(), l.bias.copy(), l.activation) for l in self.layers]
        )

    def num_params(self) -> int:
        return sum(p.size for p in self.parameters())

    def all_finite(self) -> bool:
        return all(np.isfinite(p).all() for p in self.parameters())


# A GradientSet mirrors DenseNet.layers: one (d_weight, d_bias) pair per layer.
GradientSet = list[tuple[np.ndarray, np.ndarray]]


def he_uniform(rng: np.random.Generator, out_dim: int, in_dim: int) -> np.ndarray:
    """He-style uniform fan-in init, U(-sqrt(6/in), +sqrt(6/in))."""
    limit = np.sqrt(6.0 / in_dim)
    return rng.uniform(-limit, limit, size=(out_dim, in_dim))


def init_dense(
    rng: np.random.Generator,
    dims: list[int],
    hidden_activation: str = "relu",
    output_activation: str = "identity",
) -> DenseNet:
    """Build a DenseNet with He-uniform weights and zero biases.

    dims is [in, hidden..., out]; every hidden layer gets
    hidden_activation, the last layer output_activation.
    """
    if len(dims) < 2:
        raise ValueError("dims needs at least an input and an output size")
    layers = []
    for i, (d_in, d_out) in enumerate(zip(dims[:-1], dims[1:])):
        act = output_activation if i == len(dims) - 2 else hidden_activation
        layers.append(Layer(he_uniform(rng, d_out, d_in), np.zeros(d_out), act))
    return DenseNet(layers)


def _apply_activation(z: np.ndarray, activation: str) -> np.ndarray:
    if activation == "relu":
        return np.maximum(z, 0.0)
    return z


def forward(net: DenseNet, x: np.ndarray) -> np.ndarray:
    """Evaluate the network on a single vector or a (batch, in) matrix."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != net.in_dim:
        raise ValueError(
            f"input width {x.shape[-1] if x.ndim else 0} does not match "
            f"net input dimension {net.in_dim}"
        )
    for layer in net.layers:
        x = _apply_activation(x @ layer.weight.T + layer.bias, layer.activation)
    return x[0] if single else x


def forward_cached(net: DenseNet, x: np.ndarray) -> tuple[np.ndarray, list]:
    """Forward pass over a (batch, in) matrix, keeping what backward needs.

    Returns (output, cache); cache holds per-layer (input, pre-activation).
    """
    if x.ndim != 2 or x.shape[1] != net.in_dim:
        raise ValueError("forward_cached expects a (batch, in) matrix")
    cache = []
    for layer in net.layers:
        z = x @ layer.weight.T + layer.bias
        cache.append((x, z))
        x = _apply_activation(z, layer.activation)
    return x, cache


def backward_from_cache(
    net: DenseNet, cache: list, loss_grad: np.ndarray
) -> tuple[GradientSet, np.ndarray]:
    """Reverse-mode pass given a forward cache.

    loss_grad is dLoss/dOutput, shape (batch, out). Returns the gradient
    set and dLoss/dInput. The relu subgradient at exactly 0 is 0.
    """
    g = np.asarray(loss_grad, dtype=np.float64)
    grads: GradientSet = [None] * len(net.layers)  # type: ignore[list-item]
    for i in range(len(net.layers) - 1, -1, -1):
        layer = net.layers[i]
        x_in, z = cache[i]
        if layer.activation == "relu":
            g = g * (z > 0.0)
        d_w = g.T @ x_in
        d_b = g.sum(axis=0)
        grads[i] = (d_w, d_b)
        g = g @ layer.weight
    return grads, g


def backward(net: DenseNet, x: np.ndarray, loss_grad: np.ndarray) -> GradientSet:
    """Exact derivatives of a scalar loss whose output-gradient is loss_grad.

    x may be a single vector or a (batch, in) matrix; loss_grad must have
    the same shape as forward(net, x).
    """
    x = np.asarray(x, dtype=np.float64)
    loss_grad = np.asarray(loss_grad, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
        loss_grad = loss_grad[None, :]
    if loss_grad.shape != (x.shape[0], net.out_dim):
        raise ValueError(
            f"loss_grad shape {loss_grad.shape} does not match output shape "
            f"({x.shape[0]}, {net.out_dim})"
        )
    _, cache = forward_cached(net, x)
    grads, _ = backward_from_cache(net, cache, loss_grad)
    return grads


def smooth_l1(prediction, target):
    """Smooth-L1 (Huber) loss with transition point 1.

    0.5*d^2 for |d| <= 1, |d| - 0.5 otherwise, with d = prediction - target.
    Works elementwise on arrays; inputs must be finite.
    """
    d = np.asarray(prediction, dtype=np.float64) - np.asarray(target, dtype=np.float64)
    if not np.isfinite(d).all():
        raise ValueError("smooth_l1 requires finite inputs")
    a = np.abs(d)
    out = np.where(a <= 1.0, 0.5 * d * d, a - 0.5)
    return float(out) if out.ndim == 0 else out


def smooth_l1_grad(prediction, target):
    """d(smooth_l1)/d(prediction): d clipped to [-1, 1]."""
    d = np.asarray(prediction, dtype=np.float64) - np.asarray(target, dtype=np.float64)
    out = np.clip(d, -1.0, 1.0)
    return float(out) if out.ndim == 0 else out


@dataclass
class AdamState:
    """Bias-corrected Adam moments for a fixed list of parameter arrays."""

    learning_rate: float
    beta1: float = ADAM_BETA1
    beta2: float = ADAM_BETA2
    eps: float = ADAM_EPS
    t: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)

    @classmethod
    def for_params(cls, params: list[np.ndarray], learning_rate: float, **kw) -> "AdamState":
        state = cls(learning_rate=learning_rate, **kw)
        state.m = [np.zeros_like(p) for p in params]
        state.v = [np.zeros_like(p) for p in params]
        return state

    def copy(self) -> "AdamState":
        out = AdamState(self.learning_rate, self.beta1, self.beta2, self.eps, self.t)
        out.m = [a.copy() for a in self.m]
        out.v = [a.copy() for a in self.v]
        return out


def adam_update_arrays(
    params: list[np.ndarray], grads: list[np.ndarray], state: AdamState
) -> None:
    """One in-place Adam step over parallel lists of arrays."""
    if len(params) != len(state.m) or len(grads) != len(params):
        raise ValueError("params, grads, and Adam moments must align")
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if p.shape != g.shape:
            raise ValueError(f"gradient shape {g.shape} != parameter shape {p.shape}")
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    corr1 = 1.0 - b1**state.t
    corr2 = 1.0 - b2**state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        p -= state.learning_rate * (m / corr1) / (np.sqrt(v / corr2) + state.eps)


def adam_step(net: DenseNet, grads: GradientSet, state: AdamState) -> tuple[DenseNet, AdamState]:
    """One Adam step on a DenseNet, mutating net and state in place."""
    flat_grads = []
    for d_w, d_b in grads:
        flat_grads.append(d_w)
        flat_grads.append(d_b)
    adam_update_arrays(net.parameters(), flat_grads, state)
    if not net.all_finite():
        raise FloatingPointError("non-finite parameters after Adam step")
    return net, state
