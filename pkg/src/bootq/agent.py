"""Action selection: epsilon-greedy exploration on one episode head,
ensemble voting at evaluation, and the head-disagreement diversity
metric.

All argmax tie-breaks resolve to the lowest action index so evaluation
is fully deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from bootq.qnet import MultiHeadNet, NetPair, q_all


@dataclass
class EpsilonSchedule:
    """Linear decay from initial to final over decay_frames, then flat."""

    initial: float = 1.0
    final: float = 0.01
    decay_frames: int = 1_000_000

    def __post_init__(self):
        if not self.initial >= self.final >= 0.0:
            raise ValueError("epsilon schedule needs initial >= final >= 0")
        if self.decay_frames < 1:
            raise ValueError("decay_frames must be >= 1")


def epsilon_at(sched: EpsilonSchedule, frames: int) -> float:
    """Exploration ratio after the given frame count."""
    if frames < 0:
        raise ValueError("frames must be >= 0")
    if frames >= sched.decay_frames:
        return sched.final
    frac = frames / sched.decay_frames
    return sched.initial + (sched.final - sched.initial) * frac


def act_explore(
    pair: NetPair, head: int, state: np.ndarray, eps: float, rng: np.random.Generator
) -> int:
    """Epsilon-greedy action from the episode head's policy-net Q row."""
    if not 0.0 <= eps <= 1.0:
        raise ValueError("eps must be in [0, 1]")
    net = pair.policy
    if not 0 <= head < net.num_heads:
        raise ValueError(f"head {head} out of range [0, {net.num_heads})")
    if rng.random() < eps:
        return int(rng.integers(net.action_count))
    q = q_all(net, state)  # (K, A)
    return int(np.argmax(q[head]))


def act_evaluate(pair: NetPair, state: np.ndarray) -> int:
    """Majority vote over the heads' greedy actions.

    Vote ties go to the action with the larger Q summed over heads;
    any residual tie goes to the lowest action index.
    """
    q = q_all(pair.policy, state)  # (K, A)
    votes = np.argmax(q, axis=1)
    counts = np.bincount(votes, minlength=pair.policy.action_count)
    winners = np.flatnonzero(counts == counts.max())
    if len(winners) == 1:
        return int(winners[0])
    sums = q.sum(axis=0)[winners]
    return int(winners[np.argmax(sums)])


def head_disagreement(pair: NetPair, states: np.ndarray) -> float:
    """Fraction of states where the heads' greedy actions are not unanimous."""
    states = np.asarray(states, dtype=np.float64)
    if states.ndim == 1:
        states = states[None, :]
    if states.shape[0] == 0:
        raise ValueError("head_disagreement needs a nonempty state set")
    q = q_all(pair.policy, states)  # (B, K, A)
    greedy = np.argmax(q, axis=2)  # (B, K)
    return float(np.mean(np.any(greedy != greedy[:, :1], axis=1)))
