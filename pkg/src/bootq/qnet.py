"""Shared-body, K-head Q-network pair (policy and target).

The network is one dense body feeding K identically shaped head
subnetworks; every head maps the shared features to a full action-value
vector. All parameters live in a single flat float64 vector so the
optimizer can treat the whole net as one array; the body and each head
are also exposed as DenseNet views into that vector, so anything that
works on a DenseNet works on them too.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from bootq.nn import DenseNet, Layer, forward, he_uniform


class MultiHeadNet:
    """Dense body (obs_dim -> feature_dim) plus K stacked heads
    (feature_dim -> action_count).

    Head parameters are stored stacked along a leading K axis so the
    forward/backward passes over all heads are single einsum calls.
    head(k) returns a DenseNet whose arrays are views into the stack.
    """

    def __init__(
        self,
        obs_dim: int,
        action_count: int,
        num_heads: int,
        body_hidden: tuple[int, ...] = (64,),
        head_hidden: tuple[int, ...] = (32,),
    ):
        if num_heads < 1 or action_count < 1 or obs_dim < 1:
            raise ValueError("obs_dim, action_count, and num_heads must be >= 1")
        if not body_hidden:
            raise ValueError("the body needs at least one layer")
        self.obs_dim = obs_dim
        self.action_count = action_count
        self.num_heads = num_heads
        self.body_dims = (obs_dim,) + tuple(body_hidden)
        self.head_dims = (self.body_dims[-1],) + tuple(head_hidden) + (action_count,)

        size = 0
        for d_in, d_out in zip(self.body_dims[:-1], self.body_dims[1:]):
            size += d_out * d_in + d_out
        for d_in, d_out in zip(self.head_dims[:-1], self.head_dims[1:]):
            size += num_heads * (d_out * d_in + d_out)
        self.params = np.zeros(size, dtype=np.float64)

        # carve views out of the flat vector: body layers, then head stacks
        self._body_w: list[np.ndarray] = []
        self._body_b: list[np.ndarray] = []
        self._head_w: list[np.ndarray] = []  # each (K, out, in)
        self._head_b: list[np.ndarray] = []  # each (K, out)
        off = 0
        for d_in, d_out in zip(self.body_dims[:-1], self.body_dims[1:]):
            self._body_w.append(self.params[off : off + d_out * d_in].reshape(d_out, d_in))
            off += d_out * d_in
            self._body_b.append(self.params[off : off + d_out])
            off += d_out
        for d_in, d_out in zip(self.head_dims[:-1], self.head_dims[1:]):
            n = num_heads * d_out * d_in
            self._head_w.append(self.params[off : off + n].reshape(num_heads, d_out, d_in))
            off += n
            n = num_heads * d_out
            self._head_b.append(self.params[off : off + n].reshape(num_heads, d_out))
            off += n

        # activation per head layer: relu on hidden, identity on the output
        self._head_act = ["relu"] * (len(self.head_dims) - 2) + ["identity"]

    @property
    def feature_dim(self) -> int:
        return self.body_dims[-1]

    @property
    def body(self) -> DenseNet:
        return DenseNet(
            [Layer(w, b, "relu") for w, b in zip(self._body_w, self._body_b)]
        )

    def head(self, k: int) -> DenseNet:
        if not 0 <= k < self.num_heads:
            raise ValueError(f"head index {k} out of range [0, {self.num_heads})")
        return DenseNet(
            [
                Layer(w[k], b[k], act)
                for w, b, act in zip(self._head_w, self._head_b, self._head_act)
            ]
        )

    @property
    def heads(self) -> list[DenseNet]:
        return [self.head(k) for k in range(self.num_heads)]

    def init_weights(self, rng: np.random.Generator) -> None:
        """He-uniform weights, zero biases; one stacked draw per head layer."""
        for w in self._body_w:
            w[:] = he_uniform(rng, *w.shape)
        for b in self._body_b:
            b[:] = 0.0
        for w in self._head_w:
            limit = np.sqrt(6.0 / w.shape[2])
            w[:] = rng.uniform(-limit, limit, size=w.shape)
        for b in self._head_b:
            b[:] = 0.0

    def copy(self) -> "MultiHeadNet":
        other = MultiHeadNet(
            self.obs_dim,
            self.action_count,
            self.num_heads,
            self.body_dims[1:],
            self.head_dims[1:-1],
        )
        other.params[:] = self.params
        return other

    def copy_from(self, other: "MultiHeadNet") -> None:
        if other.params.shape != self.params.shape:
            raise ValueError("cannot copy parameters between different architectures")
        self.params[:] = other.params

    def zero_grad_buffer(self) -> np.ndarray:
        return np.zeros_like(self.params)

    def grad_views(self, flat: np.ndarray):
        """Views into a flat gradient buffer, laid out like the parameters."""
        views_w, views_b, views_hw, views_hb = [], [], [], []
        off = 0
        for w, b in zip(self._body_w, self._body_b):
            views_w.append(flat[off : off + w.size].reshape(w.shape))
            off += w.size
            views_b.append(flat[off : off + b.size])
            off += b.size
        for hw, hb in zip(self._head_w, self._head_b):
            views_hw.append(flat[off : off + hw.size].reshape(hw.shape))
            off += hw.size
            views_hb.append(flat[off : off + hb.size].reshape(hb.shape))
            off += hb.size
        return views_w, views_b, views_hw, views_hb


def init_net_pair(
    obs_dim: int,
    action_count: int,
    num_heads: int,
    rng: np.random.Generator,
    body_hidden: tuple[int, ...] = (64,),
    head_hidden: tuple[int, ...] = (32,),
) -> "NetPair":
    policy = MultiHeadNet(obs_dim, action_count, num_heads, body_hidden, head_hidden)
    policy.init_weights(rng)
    target = policy.copy()
    return NetPair(policy=policy, target=target)


@dataclass
class NetPair:
    """Policy network and its periodically synchronized duplicate."""

    policy: MultiHeadNet
    target: MultiHeadNet
    frames_since_sync: int = 0


def sync_target(pair: NetPair) -> NetPair:
    """Copy policy parameters into the target net, bit for bit."""
    pair.target.copy_from(pair.policy)
    pair.frames_since_sync = 0
    return pair


def features(net: MultiHeadNet, states: np.ndarray) -> np.ndarray:
    """Body output for a (B, obs) batch."""
    x = states
    for w, b in zip(net._body_w, net._body_b):
        x = np.maximum(x @ w.T + b, 0.0)
    return x


def forward_all(net: MultiHeadNet, states: np.ndarray) -> np.ndarray:
    """Q-values for every head on a (B, obs) batch, shape (K, B, A)."""
    h = features(net, states)
    for j, (hw, hb) in enumerate(zip(net._head_w, net._head_b)):
        if j == 0:
            z = np.einsum("koi,bi->kbo", hw, h)
        else:
            z = np.einsum("koi,kbi->kbo", hw, h)
        z += hb[:, None, :]
        h = np.maximum(z, 0.0) if net._head_act[j] == "relu" else z
    return h


def forward_all_cached(net: MultiHeadNet, states: np.ndarray):
    """Like forward_all but keeps pre-activations for backward_all."""
    x = states
    body_cache = []
    for w, b in zip(net._body_w, net._body_b):
        z = x @ w.T + b
        body_cache.append((x, z))
        x = np.maximum(z, 0.0)
    h = x
    head_cache = []
    for j, (hw, hb) in enumerate(zip(net._head_w, net._head_b)):
        if j == 0:
            z = np.einsum("koi,bi->kbo", hw, h)
        else:
            z = np.einsum("koi,kbi->kbo", hw, h)
        z += hb[:, None, :]
        head_cache.append((h, z))
        h = np.maximum(z, 0.0) if net._head_act[j] == "relu" else z
    return h, (body_cache, head_cache)


def backward_all(net: MultiHeadNet, cache, q_grad: np.ndarray) -> np.ndarray:
    """Gradient of a scalar loss w.r.t. the flat parameter vector.

    q_grad is dLoss/dQ with shape (K, B, A). Head gradients flow back
    through the stacks and sum into the shared body.
    """
    body_cache, head_cache = cache
    flat = net.zero_grad_buffer()
    g_w, g_b, g_hw, g_hb = net.grad_views(flat)

    g = q_grad
    for j in range(len(net._head_w) - 1, -1, -1):
        h_in, z = head_cache[j]
        if net._head_act[j] == "relu":
            g = g * (z > 0.0)
        if j == 0:
            np.einsum("kbo,bi->koi", g, h_in, out=g_hw[j])
            g_hb[j][:] = g.sum(axis=1)
            g_body = np.einsum("koi,kbo->bi", net._head_w[j], g)
        else:
            np.einsum("kbo,kbi->koi", g, h_in, out=g_hw[j])
            g_hb[j][:] = g.sum(axis=1)
            g = np.einsum("koi,kbo->kbi", net._head_w[j], g)

    g = g_body
    for i in range(len(net._body_w) - 1, -1, -1):
        x_in, z = body_cache[i]
        g = g * (z > 0.0)
        np.matmul(g.T, x_in, out=g_w[i])
        g_b[i][:] = g.sum(axis=0)
        if i > 0:
            g = g @ net._body_w[i]
    return flat


def q_all(net: MultiHeadNet, states: np.ndarray) -> np.ndarray:
    """Per-head Q-values: (K, A) for a single state, (B, K, A) for a batch."""
    states = np.asarray(states, dtype=np.float64)
    single = states.ndim == 1
    if single:
        states = states[None, :]
    if states.shape[1] != net.obs_dim:
        raise ValueError(
            f"state width {states.shape[1]} does not match obs_dim {net.obs_dim}"
        )
    q = forward_all(net, states)  # (K, B, A)
    return q[:, 0, :] if single else np.moveaxis(q, 0, 1)
