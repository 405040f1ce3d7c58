"""Bootstrapped Q-ensembles with Gaussian target noise.

A small numpy library for training multi-head Q-networks with double-Q
targets, Bernoulli head masks, and noise injected into the bootstrap
targets, plus deterministic toy environments where deep exploration can
be measured at desk scale.
"""

from bootq.nn import DenseNet, AdamState, forward, backward, smooth_l1, adam_step
from bootq.qnet import MultiHeadNet, NetPair, q_all, sync_target
from bootq.replay import Transition, ReplayBuffer, push, sample
from bootq.noise import NoiseConfig, compute_scale, sample_noise
from bootq.agent import EpsilonSchedule, epsilon_at, act_explore, act_evaluate, head_disagreement
from bootq.update import compute_targets, update_step, batch_qmax
from bootq.envs import make_env, value_iteration, EnvSpec
from bootq.config import TrainConfig
from bootq.trainer import train, evaluate
from bootq.reporting import normalized_score, performance_profile, report
from bootq.experiments import run_ablation

__version__ = "0.1.0"

__all__ = [
    "DenseNet", "AdamState", "forward", "backward", "smooth_l1", "adam_step",
    "MultiHeadNet", "NetPair", "q_all", "sync_target",
    "Transition", "ReplayBuffer", "push", "sample",
    "NoiseConfig", "compute_scale", "sample_noise",
    "EpsilonSchedule", "epsilon_at", "act_explore", "act_evaluate", "head_disagreement",
    "compute_targets", "update_step", "batch_qmax",
    "make_env", "value_iteration", "EnvSpec",
    "TrainConfig", "train", "evaluate",
    "normalized_score", "performance_profile", "report",
    "run_ablation",
]
