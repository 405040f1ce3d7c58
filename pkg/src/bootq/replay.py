"""Fixed-capacity experience buffer with per-transition head masks.

Transitions carry the K-bit Bernoulli mask drawn when they were stored;
masks are never resampled afterwards. Sampling is uniform with
replacement. The buffer is plain struct-of-arrays storage owned by the
training loop; it is not checkpointed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class Transition:
    """One replay record: (s, a, clipped r, s', terminal, mask)."""

    state: np.ndarray
    action: int
    reward: float
    next_state: np.ndarray
    terminal: bool
    mask: np.ndarray  # K booleans, fixed at storage time


@dataclass
class Batch:
    """A stacked minibatch, ready for vectorized updates."""

    states: np.ndarray  # (B, obs)
    actions: np.ndarray  # (B,) int
    rewards: np.ndarray  # (B,)
    next_states: np.ndarray  # (B, obs)
    terminals: np.ndarray  # (B,) float (0/1)
    masks: np.ndarray  # (B, K) float (0/1)

    def __len__(self) -> int:
        return self.states.shape[0]


class ReplayBuffer:
    """FIFO ring buffer of Transitions."""

    def __init__(self, capacity: int, obs_dim: int, num_heads: int, action_count: int | None = None):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self.obs_dim = obs_dim
        self.num_heads = num_heads
        self.action_count = action_count
        self.size = 0
        self._cursor = 0
        self._states = np.zeros((capacity, obs_dim))
        self._actions = np.zeros(capacity, dtype=np.int64)
        self._rewards = np.zeros(capacity)
        self._next_states = np.zeros((capacity, obs_dim))
        self._terminals = np.zeros(capacity)
        self._masks = np.zeros((capacity, num_heads))

    def __len__(self) -> int:
        return self.size

    def transition(self, index: int) -> Transition:
        """The stored transition at a ring index in [0, size)."""
        if not 0 <= index < self.size:
            raise IndexError(f"index {index} out of range [0, {self.size})")
        return Transition(
            state=self._states[index].copy(),
            action=int(self._actions[index]),
            reward=float(self._rewards[index]),
            next_state=self._next_states[index].copy(),
            terminal=bool(self._terminals[index]),
            mask=self._masks[index].astype(bool),
        )


def push(buf: ReplayBuffer, t: Transition) -> None:
    """Store a transition, evicting the oldest once the ring is full."""
    state = np.asarray(t.state, dtype=np.float64)
    next_state = np.asarray(t.next_state, dtype=np.float64)
    mask = np.asarray(t.mask)
    if state.shape != (buf.obs_dim,) or next_state.shape != (buf.obs_dim,):
        raise ValueError(f"observation shape must be ({buf.obs_dim},)")
    if mask.shape != (buf.num_heads,):
        raise ValueError(f"mask length must be {buf.num_heads}")
    if not -1.0 <= t.reward <= 1.0:
        raise ValueError(f"stored rewards must be clipped to [-1, 1], got {t.reward}")
    if buf.action_count is not None and not 0 <= t.action < buf.action_count:
        raise ValueError(f"action {t.action} out of range [0, {buf.action_count})")
    if not np.isfinite(state).all() or not np.isfinite(next_state).all():
        raise ValueError("observations must be finite")
    i = buf._cursor
    buf._states[i] = state
    buf._actions[i] = t.action
    buf._rewards[i] = t.reward
    buf._next_states[i] = next_state
    buf._terminals[i] = 1.0 if t.terminal else 0.0
    buf._masks[i] = mask.astype(np.float64)
    buf._cursor = (i + 1) % buf.capacity
    buf.size = min(buf.size + 1, buf.capacity)


def sample_indices(buf: ReplayBuffer, batch_size: int, rng: np.random.Generator) -> np.ndarray:
    """batch_size uniform draws with replacement from the live region."""
    if buf.size == 0:
        raise RuntimeError("cannot sample from an empty replay buffer")
    return rng.integers(0, buf.size, size=batch_size)


def sample(buf: ReplayBuffer, batch_size: int, rng: np.random.Generator) -> list[Transition]:
    """Uniform-with-replacement minibatch as Transition objects."""
    return [buf.transition(i) for i in sample_indices(buf, batch_size, rng)]


def sample_batch(buf: ReplayBuffer, batch_size: int, rng: np.random.Generator) -> Batch:
    """Uniform-with-replacement minibatch as stacked arrays.

    Draws indices exactly like sample(), so the two are interchangeable
    under a shared rng stream.
    """
    idx = sample_indices(buf, batch_size, rng)
    return Batch(
        states=buf._states[idx],
        actions=buf._actions[idx],
        rewards=buf._rewards[idx],
        next_states=buf._next_states[idx],
        terminals=buf._terminals[idx],
        masks=buf._masks[idx],
    )


def stack_transitions(transitions: list[Transition]) -> Batch:
    """Build a Batch from Transition objects (spec-level sample output)."""
    if not transitions:
        raise ValueError("cannot stack an empty transition list")
    return Batch(
        states=np.stack([t.state for t in transitions]).astype(np.float64),
        actions=np.array([t.action for t in transitions], dtype=np.int64),
        rewards=np.array([t.reward for t in transitions], dtype=np.float64),
        next_states=np.stack([t.next_state for t in transitions]).astype(np.float64),
        terminals=np.array([1.0 if t.terminal else 0.0 for t in transitions]),
        masks=np.stack([np.asarray(t.mask, dtype=np.float64) for t in transitions]),
    )
