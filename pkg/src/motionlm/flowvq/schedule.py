"""Shifted noise schedule and the noising/velocity algebra.

The raw time t in [0, 1] is warped by t' = s*t / (1 + (s-1)*t), a
monotone bijection on [0, 1] concentrating steps near the data end for
s > 1. The noise level is alpha(t) = 1 - t', so alpha(0) = 1 and
alpha(1) = 0, and the noising map is

    x_t = sqrt(alpha) * x + sqrt(1 - alpha) * eps

with the network's regression target v = x - x_t.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class NoiseSchedule:
    train_timesteps: int = 1000
    inference_steps: int = 28
    shift: float = 3.0

    def __post_init__(self):
        if self.train_timesteps < 1 or self.inference_steps < 1:
            raise ValueError("timestep counts must be >= 1")
        if self.shift <= 0:
            raise ValueError(f"shift must be positive, got {self.shift}")

    def warp(self, t):
        t = np.asarray(t, dtype=np.float64)
        if (t < 0).any() or (t > 1).any():
            raise ValueError("t must lie in [0, 1]")
        s = self.shift
        return s * t / (1.0 + (s - 1.0) * t)

    def alpha(self, t):
        return 1.0 - self.warp(t)

    def inverse_warp(self, t_warped):
        t_warped = np.asarray(t_warped, dtype=np.float64)
        s = self.shift
        return t_warped / (s - (s - 1.0) * t_warped)

    def sample_train_times(self, rng, n: int, mode: str = "warped-uniform"):
        """Raw times for uniformly drawn integer grid steps.

        warped-uniform places the grid in warped time (the shifted
        schedule's own axis, matching samplers that fold the shift into
        their sigma grid); grid-uniform places it in raw time.
        """
        steps = rng.integers(0, self.train_timesteps + 1, size=n)
        grid = steps.astype(np.float64) / self.train_timesteps
        if mode == "warped-uniform":
            return self.inverse_warp(grid)
        if mode == "grid-uniform":
            return grid
        raise ValueError(f"unknown time sampling mode {mode!r}")

    def inference_times(self, steps: int = None) -> np.ndarray:
        """Warped times [w_0 .. w_steps], a uniform subsample of the
        warped schedule with w_0 = 0 and w_steps = 1."""
        steps = steps or self.inference_steps
        if steps < 1:
            raise ValueError("steps must be >= 1")
        return self.warp(np.arange(steps + 1, dtype=np.float64) / steps)


def make_noisy(x: np.ndarray, t: float, epsilon: np.ndarray,
               schedule: NoiseSchedule) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    epsilon = np.asarray(epsilon, dtype=np.float64)
    if epsilon.shape != x.shape:
        raise ValueError(f"epsilon shape {epsilon.shape} != x shape {x.shape}")
    a = schedule.alpha(t)
    return np.sqrt(a) * x + np.sqrt(1.0 - a) * epsilon


def velocity_target(x: np.ndarray, x_t: np.ndarray) -> np.ndarray:
    x, x_t = np.asarray(x), np.asarray(x_t)
    if x.shape != x_t.shape:
        raise ValueError(f"shape mismatch {x.shape} vs {x_t.shape}")
    return x - x_t
