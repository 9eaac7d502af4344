"""Noise schedules for forward/reverse diffusion.

A schedule stores per-step beta/alpha tables for steps t = 1..T; step 0 is
the clean data (alpha_bar = 1 exactly). A strided sub-schedule reuses the
alpha_bar values of selected base steps so a model trained on the fine grid
can sample on a coarse one; `base_step(t)` maps sub-steps back to the
timestep ids the model was trained with.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import BadStepCount

LINEAR = "linear"
COSINE = "cosine"


@dataclass(frozen=True)
class NoiseSchedule:
    """beta/alpha tables for t = 1..T (arrays of length T, index 0 is t=1)."""

    kind: str
    beta: np.ndarray
    base_steps: np.ndarray = field(default=None)  # original t ids; identity if None

    def __post_init__(self):
        beta = np.asarray(self.beta, dtype=float).reshape(-1)
        if beta.shape[0] < 2:
            raise BadStepCount("schedule needs T >= 2 steps")
        if np.any(beta <= 0.0) or np.any(beta >= 1.0):
            raise BadStepCount("beta values must lie strictly inside (0, 1)")
        object.__setattr__(self, "beta", beta)
        alpha = 1.0 - beta
        alpha_bar = np.cumprod(alpha)
        if np.any(np.diff(alpha_bar) >= 0):
            raise BadStepCount("alpha_bar must be strictly decreasing")
        object.__setattr__(self, "_alpha", alpha)
        object.__setattr__(self, "_alpha_bar", alpha_bar)
        if self.base_steps is None:
            object.__setattr__(self, "base_steps", np.arange(1, beta.shape[0] + 1))
        else:
            object.__setattr__(self, "base_steps", np.asarray(self.base_steps, dtype=int).reshape(-1))

    @property
    def T(self) -> int:
        return self.beta.shape[0]

    @property
    def alpha(self) -> np.ndarray:
        return self._alpha

    @property
    def alpha_bar(self) -> np.ndarray:
        return self._alpha_bar

    def _check_t(self, t: int, minimum: int = 0) -> int:
        t = int(t)
        if not (minimum <= t <= self.T):
            raise BadStepCount(f"step {t} outside [{minimum}, {self.T}]")
        return t

    def alpha_bar_at(self, t: int) -> float:
        """Cumulative alpha at step t; t = 0 returns exactly 1."""
        t = self._check_t(t)
        return 1.0 if t == 0 else float(self._alpha_bar[t - 1])

    def alpha_at(self, t: int) -> float:
        t = self._check_t(t, minimum=1)
        return float(self._alpha[t - 1])

    def beta_at(self, t: int) -> float:
        t = self._check_t(t, minimum=1)
        return float(self.beta[t - 1])

    def sigma_at(self, t: int) -> float:
        """Posterior std sqrt(beta_tilde); zero noise is injected at t = 1 by callers."""
        t = self._check_t(t, minimum=1)
        ab_prev = self.alpha_bar_at(t - 1)
        ab = self.alpha_bar_at(t)
        beta_tilde = (1.0 - ab_prev) / (1.0 - ab) * self.beta_at(t)
        return float(np.sqrt(max(beta_tilde, 0.0)))

    def base_step(self, t: int) -> int:
        """Timestep id on the training grid corresponding to sub-step t."""
        t = self._check_t(t, minimum=1)
        return int(self.base_steps[t - 1])

    def strided(self, n_steps: int) -> "NoiseSchedule":
        """Sub-schedule of n_steps levels spanning [1, T] (endpoints included)."""
        n_steps = int(n_steps)
        if not (2 <= n_steps <= self.T):
            raise BadStepCount(f"strided step count {n_steps} outside [2, {self.T}]")
        picks = np.unique(np.round(np.linspace(1, self.T, n_steps)).astype(int))
        ab = np.concatenate([[1.0], self._alpha_bar[picks - 1]])
        beta_sub = 1.0 - ab[1:] / ab[:-1]
        return NoiseSchedule(kind=f"{self.kind}-strided", beta=beta_sub,
                             base_steps=self.base_steps[picks - 1])


def make_schedule(T: int, kind: str = COSINE) -> NoiseSchedule:
    """Build a linear or cosine schedule with T steps."""
    T = int(T)
    if T < 2:
        raise BadStepCount(f"T must be >= 2, got {T}")
    if kind == LINEAR:
        beta = np.linspace(1e-4, 0.02, T)
    elif kind == COSINE:
        s = 0.008
        steps = np.arange(T + 1, dtype=float)
        f = np.cos((steps / T + s) / (1.0 + s) * np.pi / 2.0) ** 2
        alpha_bar = f / f[0]
        beta = 1.0 - alpha_bar[1:] / alpha_bar[:-1]
        beta = np.clip(beta, 1e-8, 0.999)
    else:
        raise BadStepCount(f"unknown schedule kind {kind!r}")
    return NoiseSchedule(kind=kind, beta=beta)
