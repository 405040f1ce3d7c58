"""Gaussian target noise and its Q-anchored scale multiplier.

Each network update perturbs the per-head bootstrap targets with fresh
Gaussian draws, scaled by 1 + beta * (maximal policy Q on the batch).
The scale has a lower bound of 1 at zero Q and keeps growing linearly
with the Q magnitude, including through non-positive Q-values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass
class NoiseConfig:
    """Gaussian parameters and the scale growth rate.

    per_sample selects the noise granularity: an independent draw per
    (head, batch sample) when True, or one draw per head shared across
    the batch when False.
    """

    mu: float = 0.0
    sigma: float = 0.02
    beta: float = 0.05
    per_sample: bool = True

    def __post_init__(self):
        if self.sigma < 0.0:
            raise ValueError("sigma must be >= 0")
        if self.beta < 0.0:
            raise ValueError("beta must be >= 0")


def compute_scale(qmax: float, beta: float) -> float:
    """Noise multiplier 1 + beta*qmax; exactly 1 when beta*qmax is 0."""
    if not (math.isfinite(qmax) and math.isfinite(beta)):
        raise ValueError("compute_scale requires finite inputs")
    return 1.0 + beta * qmax


def sample_noise(
    num_heads: int, batch_size: int, cfg: NoiseConfig, rng: np.random.Generator
) -> np.ndarray:
    """i.i.d. Gaussian noise matrix of shape (num_heads, batch_size).

    sigma = 0 returns the all-mu matrix but still consumes the same
    number of rng draws, so toggling sigma never shifts the stream.
    """
    if num_heads < 1 or batch_size < 1:
        raise ValueError("num_heads and batch_size must be >= 1")
    if cfg.per_sample:
        draws = rng.standard_normal((num_heads, batch_size))
    else:
        draws = np.broadcast_to(
            rng.standard_normal((num_heads, 1)), (num_heads, batch_size)
        )
    return cfg.mu + cfg.sigma * draws
