"""Run configuration: a flat key=value text format over TrainConfig.

Every hyperparameter of a run lives here, with desk-scale defaults
suitable for the bundled toy environments; the corresponding full-scale
values are listed next to each key in the README. Config files are
plain text, one `key = value` per line, '#' comments allowed. The same
dotted keys work as --override arguments on the command line.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

from bootq.agent import EpsilonSchedule
from bootq.noise import NoiseConfig


class ConfigError(ValueError):
    """Malformed or out-of-bounds configuration input."""


@dataclass
class TrainConfig:
    # environment
    env_name: str = "nchain"
    env_n: int = 20
    env_horizon: int = 0  # 0 = environment default
    noop_max: int = 30

    # ensemble and masking
    num_heads: int = 9
    bernoulli_p: float = 0.9

    # learning
    gamma: float = 0.99
    learning_rate: float = 6.25e-5
    batch_size: int = 32
    learn_start: int = 32  # min buffer size before updates begin
    replay_capacity: int = 100_000  # full-scale runs used 1M

    # exploration schedule (frames)
    epsilon_initial: float = 1.0
    epsilon_final: float = 0.01
    epsilon_decay_frames: int = 30_000  # full-scale runs used 1M

    # cadences
    sync_frames: int = 1_000  # full-scale runs used 40000
    frames_per_step: int = 1  # 4 with frame-skipping capture
    steps_per_evaluation: int = 2_000  # full-scale runs used 250000
    max_frames: int = 400_000  # full-scale runs used 200M
    eval_episodes: int = 5

    # target noise
    noise_mu: float = 0.0
    noise_sigma: float = 0.02
    noise_beta: float = 0.05
    noise_per_sample: bool = True
    use_noise: bool = True  # False = the dedicated no-noise baseline path

    # architecture
    body_hidden: tuple[int, ...] = (64,)
    head_hidden: tuple[int, ...] = (32,)

    # bookkeeping
    seed: int = 0
    label: str = ""
    keep_all_checkpoints: bool = False
    timing_real: bool = False  # True records wall time, breaking bit-reproducibility

    def epsilon_schedule(self) -> EpsilonSchedule:
        return EpsilonSchedule(
            self.epsilon_initial, self.epsilon_final, self.epsilon_decay_frames
        )

    def noise_config(self) -> NoiseConfig:
        return NoiseConfig(
            self.noise_mu, self.noise_sigma, self.noise_beta, self.noise_per_sample
        )

    def variant_label(self) -> str:
        if self.label:
            return self.label
        if self.use_noise and self.noise_sigma > 0:
            return "noisy"
        return "baseline"

    def validate(self) -> "TrainConfig":
        checks = [
            (self.num_heads >= 1, "num_heads must be >= 1"),
            (0.0 <= self.bernoulli_p <= 1.0, "bernoulli_p must be in [0, 1]"),
            (0.0 <= self.gamma <= 1.0, "gamma must be in [0, 1]"),
            (self.learning_rate >= 0.0, "learning_rate must be >= 0"),
            (self.batch_size >= 1, "batch_size must be >= 1"),
            (self.learn_start >= self.batch_size, "learn_start must be >= batch_size"),
            (self.replay_capacity >= 1, "replay_capacity must be >= 1"),
            (self.epsilon_initial >= self.epsilon_final >= 0.0,
             "epsilon schedule needs initial >= final >= 0"),
            (self.epsilon_decay_frames >= 1, "epsilon_decay_frames must be >= 1"),
            (self.sync_frames >= 1, "sync_frames must be >= 1"),
            (self.frames_per_step >= 1, "frames_per_step must be >= 1"),
            (self.steps_per_evaluation >= 1, "steps_per_evaluation must be >= 1"),
            (self.max_frames >= 0, "max_frames must be >= 0"),
            (self.eval_episodes >= 1, "eval_episodes must be >= 1"),
            (self.noise_sigma >= 0.0, "noise.sigma must be >= 0"),
            (self.noise_beta >= 0.0, "noise.beta must be >= 0"),
            (self.noop_max >= 0, "noop_max must be >= 0"),
            (self.seed >= 0, "seed must be >= 0"),
            (all(h >= 1 for h in self.body_hidden) and len(self.body_hidden) >= 1,
             "body_hidden needs at least one positive width"),
            (all(h >= 1 for h in self.head_hidden),
             "head_hidden widths must be positive"),
        ]
        for ok, message in checks:
            if not ok:
                raise ConfigError(message)
        return self


# dotted config key -> TrainConfig field
KEY_MAP = {
    "env.name": "env_name",
    "env.n": "env_n",
    "env.horizon": "env_horizon",
    "noop_max": "noop_max",
    "num_heads": "num_heads",
    "bernoulli_p": "bernoulli_p",
    "gamma": "gamma",
    "learning_rate": "learning_rate",
    "batch_size": "batch_size",
    "learn_start": "learn_start",
    "replay_capacity": "replay_capacity",
    "epsilon.initial": "epsilon_initial",
    "epsilon.final": "epsilon_final",
    "epsilon.decay_frames": "epsilon_decay_frames",
    "sync_frames": "sync_frames",
    "frames_per_step": "frames_per_step",
    "steps_per_evaluation": "steps_per_evaluation",
    "max_frames": "max_frames",
    "eval_episodes": "eval_episodes",
    "noise.mu": "noise_mu",
    "noise.sigma": "noise_sigma",
    "noise.beta": "noise_beta",
    "noise.per_sample": "noise_per_sample",
    "use_noise": "use_noise",
    "body_hidden": "body_hidden",
    "head_hidden": "head_hidden",
    "seed": "seed",
    "label": "label",
    "keep_all_checkpoints": "keep_all_checkpoints",
    "timing.real": "timing_real",
}

_FIELD_TO_KEY = {v: k for k, v in KEY_MAP.items()}
_FIELD_TYPES = {f.name: f.type for f in fields(TrainConfig)}


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("true", "1", "yes", "on"):
        return True
    if low in ("false", "0", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


def _parse_int_list(text: str) -> tuple[int, ...]:
    parts = [p for p in text.replace(",", " ").split() if p]
    try:
        return tuple(int(p) for p in parts)
    except ValueError as e:
        raise ConfigError(f"expected a list of integers, got {text!r}") from e


def parse_value(field_name: str, text: str):
    kind = _FIELD_TYPES[field_name]
    text = text.strip()
    try:
        if kind == "bool":
            return _parse_bool(text)
        if kind == "int":
            return int(text)
        if kind == "float":
            return float(text)
        if kind == "str":
            return text
        if kind.startswith("tuple"):
            return _parse_int_list(text)
    except ConfigError:
        raise
    except ValueError as e:
        raise ConfigError(f"bad value {text!r} for {field_name}: {e}") from e
    raise ConfigError(f"unhandled field type {kind!r} for {field_name}")


def apply_overrides(cfg: TrainConfig, overrides: dict[str, str]) -> TrainConfig:
    for key, raw in overrides.items():
        if key not in KEY_MAP:
            raise ConfigError(f"unknown config key {key!r}")
        field_name = KEY_MAP[key]
        setattr(cfg, field_name, parse_value(field_name, raw))
    return cfg


def parse_config_text(text: str, path: str = "<config>") -> TrainConfig:
    cfg = TrainConfig()
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, raw = stripped.split("=", 1)
        key = key.strip()
        if key not in KEY_MAP:
            raise ConfigError(f"{path}:{lineno}: unknown config key {key!r}")
        field_name = KEY_MAP[key]
        try:
            setattr(cfg, field_name, parse_value(field_name, raw))
        except ConfigError as e:
            raise ConfigError(f"{path}:{lineno}: {e}") from e
    return cfg.validate()


def load_config(path) -> TrainConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read(), path=str(path))


def format_config(cfg: TrainConfig) -> str:
    """Canonical text form; parsing it back reproduces cfg exactly."""
    lines = []
    for f in fields(TrainConfig):
        value = getattr(cfg, f.name)
        if isinstance(value, bool):
            text = "true" if value else "false"
        elif isinstance(value, tuple):
            text = ",".join(str(v) for v in value)
        elif isinstance(value, float):
            text = repr(value)
        else:
            text = str(value)
        lines.append(f"{_FIELD_TO_KEY[f.name]} = {text}")
    return "\n".join(lines) + "\n"


def save_config(cfg: TrainConfig, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_config(cfg))
