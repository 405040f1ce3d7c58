"""One network update: double-Q noisy targets per head, masked Smooth-L1
losses averaged over heads, and a single Adam step on the policy net.

The per-head target for sample i is

    r_i + gamma * Q_target,k(s'_i, a*) * (1 - terminal_i) + scale * noise[k, i]

where a* is the argmax of the *policy* net's head k at s'_i (double-Q
action selection) and scale = 1 + beta * qmax over the batch's current
states. Targets are constants: no gradient flows through the target
network. Each head's loss is masked by its stored Bernoulli bits,
averaged over the batch, and the head losses are averaged over K.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from bootq.nn import AdamState, adam_update_arrays, smooth_l1
from bootq.noise import NoiseConfig, compute_scale, sample_noise
from bootq.qnet import MultiHeadNet, NetPair, backward_all, forward_all, forward_all_cached
from bootq.replay import Batch


@dataclass
class UpdateStats:
    """Per-update scalars for the metrics sink."""

    total_loss: float
    batch_qmax: float
    scale: float


def batch_qmax(policy: MultiHeadNet, states: np.ndarray) -> float:
    """Max policy Q over the batch: max over samples, heads, and actions."""
    states = np.asarray(states, dtype=np.float64)
    if states.ndim == 1:
        states = states[None, :]
    if states.shape[0] == 0:
        raise ValueError("batch_qmax needs a nonempty batch")
    return float(forward_all(policy, states).max())


def compute_targets(
    pair: NetPair,
    batch: Batch,
    scale: float,
    noise: np.ndarray | None,
    gamma: float,
) -> np.ndarray:
    """Per-head double-Q targets, shape (K, B). noise=None adds no noise
    term at all (the no-noise code path)."""
    if not 0.0 <= gamma <= 1.0:
        raise ValueError("gamma must be in [0, 1]")
    k, b = pair.policy.num_heads, len(batch)
    if noise is not None and noise.shape != (k, b):
        raise ValueError(f"noise shape {noise.shape} != ({k}, {b})")
    q_next_policy = forward_all(pair.policy, batch.next_states)  # (K, B, A)
    best = np.argmax(q_next_policy, axis=2)  # (K, B), ties -> lowest index
    q_next_target = forward_all(pair.target, batch.next_states)  # (K, B, A)
    bootstrap = np.take_along_axis(q_next_target, best[:, :, None], axis=2)[:, :, 0]
    targets = batch.rewards[None, :] + gamma * bootstrap * (1.0 - batch.terminals[None, :])
    if noise is not None:
        targets = targets + scale * noise
    return targets


def update_step(
    pair: NetPair,
    batch: Batch,
    gamma: float,
    noise_cfg: NoiseConfig,
    adam_state: AdamState,
    noise_rng,
    use_noise: bool = True,
) -> UpdateStats:
    """Run one full update on the policy network.

    Order matters for reproducibility: qmax and scale come from the
    batch's current states before any noise is drawn; the target net is
    read-only throughout.
    """
    if len(batch) == 0:
        raise ValueError("update_step needs a nonempty batch")
    policy = pair.policy
    k, b = policy.num_heads, len(batch)

    q_pred_all, cache = forward_all_cached(policy, batch.states)  # (K, B, A)
    qmax = float(q_pred_all.max())
    scale = compute_scale(qmax, noise_cfg.beta)
    noise = sample_noise(k, b, noise_cfg, noise_rng) if use_noise else None
    targets = compute_targets(pair, batch, scale, noise, gamma)

    rows = np.arange(b)
    pred = q_pred_all[:, rows, batch.actions]  # (K, B)
    diff = pred - targets
    mask = batch.masks.T  # (K, B)
    total_loss = float((mask * smooth_l1(pred, targets)).sum() / (k * b))

    if not np.isfinite(total_loss):
        raise FloatingPointError(
            f"non-finite loss (qmax={qmax}, scale={scale}); "
            "check reward scales and learning rate"
        )

    # d(totalLoss)/d(pred): masked Huber slope, averaged over batch and heads
    g = mask * np.clip(diff, -1.0, 1.0) / (k * b)
    q_grad = np.zeros_like(q_pred_all)
    q_grad[:, rows, batch.actions] = g
    grad_flat = backward_all(policy, cache, q_grad)
    adam_update_arrays([policy.params], [grad_flat], adam_state)
    return UpdateStats(total_loss=total_loss, batch_qmax=qmax, scale=scale)
