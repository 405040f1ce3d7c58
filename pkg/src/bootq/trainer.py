"""The training loop: episodes with a per-episode head, epsilon-greedy
acting, masked replay writes, one update per step, periodic target
sync, and periodic ensemble-vote evaluation.

A run is a deterministic function of (config, seed): every stochastic
component draws from its own named stream, and the recorded wall-clock
column is 0.0 unless timing.real is set (real timestamps would break
bit-reproducibility of the metrics file, which the determinism tests
require). Artifacts per run directory:

    config.txt          the resolved configuration (canonical form)
    metrics.csv         one row per evaluation point
    checkpoint_latest.bin   rolling checkpoint at each evaluation point
    checkpoint_final.bin    checkpoint at termination
    streams.txt         per-stream draw counters
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass, field

import numpy as np

from bootq.agent import act_evaluate, act_explore, epsilon_at, head_disagreement
from bootq.checkpoint import save_trainer_checkpoint
from bootq.config import ConfigError, TrainConfig, save_config
from bootq.envs import TabularEnv, make_env
from bootq.nn import AdamState
from bootq.noise import compute_scale
from bootq.qnet import NetPair, init_net_pair, q_all, sync_target
from bootq.replay import ReplayBuffer, Transition, push, sample_batch
from bootq.rng import RngStreams
from bootq.update import update_step


class MetricsParseError(ValueError):
    """A metrics CSV that does not match the documented schema."""


@dataclass
class EvalRow:
    frames: int
    episode_returns: list[float]
    mean: float
    std: float
    qmax: float
    scale: float
    disagreement: float
    wallclock_s: float


@dataclass
class RunMetrics:
    """Per-evaluation records, ordered by frames."""

    eval_episodes: int
    rows: list[EvalRow] = field(default_factory=list)

    def header(self) -> str:
        eps = ",".join(f"ep{i}" for i in range(self.eval_episodes))
        return f"frames,{eps},mean,std,qmax,scale,disagreement,wallclock_s"

    def to_csv(self) -> str:
        lines = [self.header()]
        for row in self.rows:
            cells = [str(row.frames)]
            cells += [repr(float(r)) for r in row.episode_returns]
            cells += [
                repr(float(row.mean)),
                repr(float(row.std)),
                repr(float(row.qmax)),
                repr(float(row.scale)),
                repr(float(row.disagreement)),
                repr(float(row.wallclock_s)),
            ]
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.to_csv())


def load_metrics(path) -> RunMetrics:
    """Parse a metrics CSV, reporting the file and line on any defect."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise MetricsParseError(f"{path}:1: empty metrics file")
    header = lines[0].split(",")
    tail = ["mean", "std", "qmax", "scale", "disagreement", "wallclock_s"]
    n_eps = len(header) - 1 - len(tail)
    expected = ["frames"] + [f"ep{i}" for i in range(n_eps)] + tail
    if n_eps < 1 or header != expected:
        raise MetricsParseError(f"{path}:1: unrecognized metrics header {lines[0]!r}")
    metrics = RunMetrics(eval_episodes=n_eps)
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cells = line.split(",")
        if len(cells) != len(expected):
            raise MetricsParseError(
                f"{path}:{lineno}: expected {len(expected)} fields, got {len(cells)}"
            )
        try:
            frames = int(cells[0])
            values = [float(c) for c in cells[1:]]
        except ValueError as e:
            raise MetricsParseError(f"{path}:{lineno}: {e}") from e
        metrics.rows.append(
            EvalRow(
                frames=frames,
                episode_returns=values[:n_eps],
                mean=values[n_eps],
                std=values[n_eps + 1],
                qmax=values[n_eps + 2],
                scale=values[n_eps + 3],
                disagreement=values[n_eps + 4],
                wallclock_s=values[n_eps + 5],
            )
        )
    if any(a.frames > b.frames for a, b in zip(metrics.rows, metrics.rows[1:])):
        raise MetricsParseError(f"{path}: rows are not ordered by frames")
    return metrics


@dataclass
class RunResult:
    pair: NetPair
    adam_state: AdamState
    metrics: RunMetrics
    frames: int
    steps: int
    stream_draws: dict[str, int]
    head_counts: np.ndarray
    out_dir: str | None = None


def evaluate(
    pair: NetPair,
    env: TabularEnv,
    n_episodes: int,
    rng,
    noop_max: int = 0,
) -> list[float]:
    """Raw (unclipped) returns of n_episodes ensemble-vote episodes.

    Each episode gets a fresh seed drawn from rng, which also drives the
    no-op start randomization inside the environment.
    """
    if n_episodes < 1:
        raise ValueError("n_episodes must be >= 1")
    returns = []
    for _ in range(n_episodes):
        seed = int(rng.integers(0, 2**31 - 1))
        obs = env.reset(seed=seed, noop_max=noop_max)
        total = 0.0
        while not env.terminal:
            result = env.step(act_evaluate(pair, obs))
            total += result.raw_reward
            obs = result.observation
        returns.append(total)
    return returns


def _write_streams(path, draws: dict[str, int]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for name, count in draws.items():
            fh.write(f"{name} = {count}\n")


def train(cfg: TrainConfig, out_dir: str | None = None, probe=None) -> RunResult:
    """Run a full training loop; returns everything in memory and, if
    out_dir is given, writes the run artifacts there.

    probe, if given, is called as probe(frames, steps, pair) after every
    environment step (after any update and sync); tests use it to watch
    the sync cadence.
    """
    cfg.validate()
    if cfg.sync_frames % cfg.frames_per_step != 0:
        raise ConfigError("sync_frames must be a multiple of frames_per_step")

    streams = RngStreams(cfg.seed)
    env = make_env(cfg.env_name, n=cfg.env_n or None, horizon=cfg.env_horizon or None)
    eval_env = make_env(cfg.env_name, n=cfg.env_n or None, horizon=cfg.env_horizon or None)
    probe_states = env.all_observations()

    pair = init_net_pair(
        env.obs_dim,
        env.n_actions,
        cfg.num_heads,
        streams.weights,
        body_hidden=cfg.body_hidden,
        head_hidden=cfg.head_hidden,
    )
    adam_state = AdamState.for_params([pair.policy.params], cfg.learning_rate)
    buf = ReplayBuffer(cfg.replay_capacity, env.obs_dim, cfg.num_heads, env.n_actions)
    sched = cfg.epsilon_schedule()
    noise_cfg = cfg.noise_config()
    metrics = RunMetrics(eval_episodes=cfg.eval_episodes)
    head_counts = np.zeros(cfg.num_heads, dtype=np.int64)

    # the environment seed is fixed for the whole training phase
    train_env_seed = int(streams.env.integers(0, 2**31 - 1))

    clock_start = time.perf_counter()

    def wallclock() -> float:
        return time.perf_counter() - clock_start if cfg.timing_real else 0.0

    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        save_config(cfg, os.path.join(out_dir, "config.txt"))
        if cfg.keep_all_checkpoints:
            os.makedirs(os.path.join(out_dir, "checkpoints"), exist_ok=True)

    last_qmax = 0.0
    last_scale = 0.0
    frames = 0
    steps = 0

    def record_evaluation() -> None:
        nonlocal last_qmax, last_scale
        if steps == 0:
            # before any update: report the probe-set maximum instead
            last_qmax = float(q_all(pair.policy, probe_states).max())
            last_scale = compute_scale(last_qmax, cfg.noise_beta)
        returns = evaluate(pair, eval_env, cfg.eval_episodes, streams.eval_seeds, cfg.noop_max)
        metrics.rows.append(
            EvalRow(
                frames=frames,
                episode_returns=returns,
                mean=float(np.mean(returns)),
                std=float(np.std(returns)),
                qmax=last_qmax,
                scale=last_scale,
                disagreement=head_disagreement(pair, probe_states),
                wallclock_s=wallclock(),
            )
        )
        if out_dir is not None:
            metrics.save(os.path.join(out_dir, "metrics.csv"))
            if cfg.keep_all_checkpoints:
                ckpt = os.path.join(out_dir, "checkpoints", f"frame_{frames:010d}.bin")
            else:
                ckpt = os.path.join(out_dir, "checkpoint_latest.bin")
            save_trainer_checkpoint(ckpt, pair, adam_state, frames, steps)

    if cfg.max_frames > 0:
        record_evaluation()

    obs = None
    episode_head = 0
    while frames < cfg.max_frames:
        if obs is None:
            obs = env.reset(seed=train_env_seed, noop_max=cfg.noop_max, rng=streams.noop)
            episode_head = int(streams.head_select.integers(cfg.num_heads))
            head_counts[episode_head] += 1
        frames += cfg.frames_per_step
        steps += 1
        eps = epsilon_at(sched, frames)
        action = act_explore(pair, episode_head, obs, eps, streams.epsilon)
        result = env.step(action)
        mask = streams.masks.random(cfg.num_heads) < cfg.bernoulli_p
        push(
            buf,
            Transition(
                state=obs,
                action=action,
                reward=result.clipped_reward,
                next_state=result.observation,
                terminal=result.terminal,
                mask=mask,
            ),
        )
        if buf.size >= cfg.learn_start:
            batch = sample_batch(buf, cfg.batch_size, streams.replay_sample)
            try:
                stats = update_step(
                    pair, batch, cfg.gamma, noise_cfg, adam_state,
                    streams.noise, use_noise=cfg.use_noise,
                )
            except FloatingPointError as e:
                raise FloatingPointError(f"at frame {frames}: {e}") from e
            last_qmax, last_scale = stats.batch_qmax, stats.scale
        pair.frames_since_sync += cfg.frames_per_step
        if frames % cfg.sync_frames == 0:
            sync_target(pair)
        if steps % cfg.steps_per_evaluation == 0:
            record_evaluation()
        if probe is not None:
            probe(frames, steps, pair)
        obs = None if result.terminal else result.observation

    if out_dir is not None:
        metrics.save(os.path.join(out_dir, "metrics.csv"))
        save_trainer_checkpoint(
            os.path.join(out_dir, "checkpoint_final.bin"), pair, adam_state, frames, steps
        )
        _write_streams(os.path.join(out_dir, "streams.txt"), streams.draw_counts())

    return RunResult(
        pair=pair,
        adam_state=adam_state,
        metrics=metrics,
        frames=frames,
        steps=steps,
        stream_draws=streams.draw_counts(),
        head_counts=head_counts,
        out_dir=out_dir,
    )
