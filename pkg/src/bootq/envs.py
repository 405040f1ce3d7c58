"""Deterministic desk-scale environments with an episodic contract.

All three tasks are tabular MDPs exposed through one-hot observations,
so a value-iteration oracle can certify optimal and random-policy
returns exactly:

  nchain       length-N corridor; a small certain reward for going left
               at the start, a large reward only at the far end.
  deepsea      N x N descending grid; the treasure sits bottom-right and
               every step toward it costs a little.
  sparsecliff  gridworld with a cliff row between start and goal; the
               only rewards are the +1 goal and the -1 cliff. Has a
               designated no-op action ("stay"), so no-op starts apply.

Episodes end on a step limit (treated as terminal for learning) or, in
sparsecliff, on entering the cliff or the goal. Rewards are returned
both raw and clipped to [-1, 1]; the suite's raw rewards already sit in
that range, so clipping only matters for custom reward scales.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class EnvSpec:
    """Static facts about an environment, with oracle-certified returns."""

    name: str
    obs_dim: int
    action_count: int
    max_episode_steps: int
    optimal_return: float
    random_return: float


@dataclass
class StepResult:
    observation: np.ndarray
    raw_reward: float
    clipped_reward: float
    terminal: bool


class TabularEnv:
    """Deterministic tabular MDP with one-hot observations.

    Dynamics live in dense (S, A) tables: next_state, reward, and a done
    flag meaning the transition ends the episode. A fixed step limit
    also ends episodes. Instances are single-owner; use independent
    instances for parallel evaluation.
    """

    def __init__(
        self,
        name: str,
        next_state: np.ndarray,
        reward: np.ndarray,
        done: np.ndarray,
        start_state: int,
        horizon: int,
        noop_action: int | None = None,
    ):
        self.name = name
        self.n_states, self.n_actions = next_state.shape
        self.next_state = next_state
        self.reward = reward
        self.done = done
        self.start_state = start_state
        self.horizon = horizon
        self.noop_action = noop_action
        self._eye = np.eye(self.n_states)
        self._state = start_state
        self._steps = 0
        self._terminal = True  # force a reset before stepping
        self._rng: np.random.Generator | None = None
        self.last_reset_noops = 0
        self._spec: EnvSpec | None = None

    @property
    def obs_dim(self) -> int:
        return self.n_states

    @property
    def state(self) -> int:
        return self._state

    def observation(self, state: int | None = None) -> np.ndarray:
        return self._eye[self._state if state is None else state].copy()

    def all_observations(self) -> np.ndarray:
        """One-hot encodings of every state; the diversity probe set."""
        return self._eye.copy()

    def spec(self) -> EnvSpec:
        if self._spec is None:
            solution = value_iteration(self, gamma=1.0)
            self._spec = EnvSpec(
                name=self.name,
                obs_dim=self.obs_dim,
                action_count=self.n_actions,
                max_episode_steps=self.horizon,
                optimal_return=solution.optimal_return,
                random_return=random_policy_value(self, gamma=1.0),
            )
        return self._spec

    def reset(
        self,
        seed: int | None = None,
        noop_max: int = 0,
        rng: np.random.Generator | None = None,
    ) -> np.ndarray:
        """Reinitialize; optionally burn a random number of no-op steps.

        The no-op count is uniform on [0, noop_max) and drawn from rng
        if given, else from the env's own generator (reseeded whenever
        seed is passed). Environments without a designated no-op action
        take 0 no-ops. No-op steps run through the normal dynamics and
        consume episode budget.
        """
        if noop_max < 0:
            raise ValueError("noop_max must be >= 0")
        if seed is not None:
            self._rng = np.random.default_rng(seed)
        self._state = self.start_state
        self._steps = 0
        self._terminal = False
        self.last_reset_noops = 0
        if noop_max > 0 and self.noop_action is not None:
            source = rng if rng is not None else self._rng
            if source is None:
                self._rng = source = np.random.default_rng()
            count = int(source.integers(0, noop_max))
            self.last_reset_noops = count
            for _ in range(count):
                if self._terminal:
                    break
                self._advance(self.noop_action)
        return self.observation()

    def _advance(self, action: int) -> tuple[float, bool]:
        s = self._state
        raw = float(self.reward[s, action])
        self._state = int(self.next_state[s, action])
        self._steps += 1
        self._terminal = bool(self.done[s, action]) or self._steps >= self.horizon
        return raw, self._terminal

    def step(self, action: int) -> StepResult:
        if self._terminal:
            raise RuntimeError("step() called on a terminal episode; reset first")
        if not 0 <= action < self.n_actions:
            raise ValueError(f"action {action} out of range [0, {self.n_actions})")
        raw, terminal = self._advance(action)
        clipped = min(1.0, max(-1.0, raw))
        return StepResult(
            observation=self.observation(),
            raw_reward=raw,
            clipped_reward=clipped,
            terminal=terminal,
        )


def nchain(n: int = 20, horizon: int | None = None) -> TabularEnv:
    """Corridor of n states. Left at state 0 pays 0.001 and stays put;
    right at state n-1 pays 1.0 and stays put; everything else pays 0.
    Default horizon n + 9, so the optimal policy banks ten big rewards.
    """
    if n < 2:
        raise ValueError("nchain needs n >= 2")
    next_state = np.zeros((n, 2), dtype=np.int64)
    reward = np.zeros((n, 2))
    done = np.zeros((n, 2), dtype=bool)
    for s in range(n):
        next_state[s, 0] = max(s - 1, 0)
        next_state[s, 1] = min(s + 1, n - 1)
    reward[0, 0] = 0.001
    reward[n - 1, 1] = 1.0
    return TabularEnv(
        name=f"nchain{n}",
        next_state=next_state,
        reward=reward,
        done=done,
        start_state=0,
        horizon=horizon if horizon is not None else n + 9,
    )


def deepsea(n: int = 10, horizon: int | None = None) -> TabularEnv:
    """n x n descending grid. Action 1 moves right-down at cost 0.01/n,
    action 0 moves left-down for free; the treasure (+1.0) is granted on
    the final step out of the bottom-right cell. Episodes last n steps.
    """
    if n < 2:
        raise ValueError("deepsea needs n >= 2")
    n_states = n * n
    next_state = np.zeros((n_states, 2), dtype=np.int64)
    reward = np.zeros((n_states, 2))
    done = np.zeros((n_states, 2), dtype=bool)
    move_cost = 0.01 / n
    for row in range(n):
        for col in range(n):
            s = row * n + col
            left = max(col - 1, 0)
            right = min(col + 1, n - 1)
            if row < n - 1:
                next_state[s, 0] = (row + 1) * n + left
                next_state[s, 1] = (row + 1) * n + right
            else:
                next_state[s, 0] = s
                next_state[s, 1] = s
                done[s, :] = True
            reward[s, 1] = -move_cost
    treasure = (n - 1) * n + (n - 1)
    reward[treasure, 1] = 1.0 - move_cost
    return TabularEnv(
        name=f"deepsea{n}",
        next_state=next_state,
        reward=reward,
        done=done,
        start_state=0,
        horizon=horizon if horizon is not None else n,
    )


def sparsecliff(
    width: int = 8, height: int = 4, horizon: int | None = None
) -> TabularEnv:
    """Gridworld with a cliff along the bottom row between start and
    goal. Entering the cliff pays -1 and ends the episode; entering the
    goal pays +1 and ends it; every other move pays 0. Action 4 ("stay")
    is the designated no-op.
    """
    if width < 3 or height < 2:
        raise ValueError("sparsecliff needs width >= 3 and height >= 2")
    n_states = width * height
    moves = [(0, 1), (1, 0), (0, -1), (-1, 0), (0, 0)]  # up, right, down, left, stay
    next_state = np.zeros((n_states, 5), dtype=np.int64)
    reward = np.zeros((n_states, 5))
    done = np.zeros((n_states, 5), dtype=bool)

    def index(x, y):
        return y * width + x

    goal = index(width - 1, 0)
    cliff = {index(x, 0) for x in range(1, width - 1)}
    for y in range(height):
        for x in range(width):
            s = index(x, y)
            for a, (dx, dy) in enumerate(moves):
                nx = min(max(x + dx, 0), width - 1)
                ny = min(max(y + dy, 0), height - 1)
                ns = index(nx, ny)
                next_state[s, a] = ns
                if ns in cliff and ns != s:
                    reward[s, a] = -1.0
                    done[s, a] = True
                elif ns == goal and ns != s:
                    reward[s, a] = 1.0
                    done[s, a] = True
    return TabularEnv(
        name=f"sparsecliff{width}x{height}",
        next_state=next_state,
        reward=reward,
        done=done,
        start_state=index(0, 0),
        horizon=horizon if horizon is not None else 60,
        noop_action=4,
    )


_REGISTRY = {"nchain": nchain, "deepsea": deepsea, "sparsecliff": sparsecliff}


def make_env(name: str, n: int | None = None, horizon: int | None = None) -> TabularEnv:
    """Construct an environment by config name."""
    if name not in _REGISTRY:
        raise ValueError(f"unknown environment {name!r}; choices: {sorted(_REGISTRY)}")
    kwargs = {}
    if horizon is not None:
        kwargs["horizon"] = horizon
    if n is not None:
        if name == "sparsecliff":
            kwargs["width"] = n
        else:
            kwargs["n"] = n
    return _REGISTRY[name](**kwargs)


@dataclass
class ValueSolution:
    """Finite-horizon optimal values: values[t, s] with t steps remaining."""

    values: np.ndarray  # (horizon + 1, n_states)
    optimal_return: float
    greedy_policy: np.ndarray  # (n_states,) greedy action at full horizon
    gamma: float


MAX_ORACLE_STATES = 100_000


def value_iteration(env: TabularEnv, gamma: float = 1.0) -> ValueSolution:
    """Exact finite-horizon backward induction on the env's tables.

    With gamma = 1 the start-state value is the best achievable raw
    episode return; step-limit termination is built into the horizon.
    """
    if env.n_states > MAX_ORACLE_STATES:
        raise ValueError(
            f"state space too large for the tabular oracle ({env.n_states} states)"
        )
    h, s_count = env.horizon, env.n_states
    values = np.zeros((h + 1, s_count))
    keep = gamma * (~env.done)
    q = None
    for t in range(1, h + 1):
        q = env.reward + keep * values[t - 1][env.next_state]
        values[t] = q.max(axis=1)
    greedy = np.argmax(q, axis=1) if q is not None else np.zeros(s_count, dtype=np.int64)
    return ValueSolution(
        values=values,
        optimal_return=float(values[h, env.start_state]),
        greedy_policy=greedy,
        gamma=gamma,
    )


def random_policy_value(env: TabularEnv, gamma: float = 1.0) -> float:
    """Exact expected return of the uniform-random policy."""
    if env.n_states > MAX_ORACLE_STATES:
        raise ValueError(
            f"state space too large for the tabular oracle ({env.n_states} states)"
        )
    values = np.zeros(env.n_states)
    keep = gamma * (~env.done)
    for _ in range(env.horizon):
        q = env.reward + keep * values[env.next_state]
        values = q.mean(axis=1)
    return float(values[env.start_state])


def random_policy_returns(
    env: TabularEnv, episodes: int, rng: np.random.Generator
) -> np.ndarray:
    """Monte-Carlo raw returns of the uniform-random policy."""
    out = np.zeros(episodes)
    for i in range(episodes):
        env.reset(seed=int(rng.integers(1 << 31)))
        total, terminal = 0.0, False
        while not terminal:
            result = env.step(int(rng.integers(env.n_actions)))
            total += result.raw_reward
            terminal = result.terminal
        out[i] = total
    return out
