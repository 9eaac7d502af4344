"""Analytic Gaussian denoiser: an exact noise predictor for N(mean, std^2) data.

For data x0 ~ N(m, s^2), the perturbed marginal at step t is
N(sqrt(ab_t) m, ab_t s^2 + 1 - ab_t) and the posterior-mean noise prediction
is available in closed form. Used as the ground-truth oracle for sampler and
composition tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .schedule import NoiseSchedule


@dataclass(frozen=True)
class AnalyticGaussianDenoiser:
    """Exact eps predictor for scalar-per-dimension Gaussian data."""

    mean: np.ndarray
    std: float
    schedule: NoiseSchedule

    def __post_init__(self):
        object.__setattr__(self, "mean", np.asarray(self.mean, dtype=float))
        if self.std <= 0:
            raise ValueError("std must be positive")

    def perturbed_variance(self, t: int) -> float:
        ab = self.schedule.alpha_bar_at(t)
        return ab * self.std**2 + (1.0 - ab)

    def perturbed_mean(self, t: int) -> np.ndarray:
        return np.sqrt(self.schedule.alpha_bar_at(t)) * self.mean

    def score(self, x_t: np.ndarray, t: int) -> np.ndarray:
        """Exact gradient of log of the perturbed density."""
        return -(np.asarray(x_t, dtype=float) - self.perturbed_mean(t)) / self.perturbed_variance(t)

    def predict_eps(self, x_t: np.ndarray, t: int) -> np.ndarray:
        """Posterior-mean noise prediction; equals -sqrt(1-ab_t) * score."""
        ab = self.schedule.alpha_bar_at(t)
        return -np.sqrt(1.0 - ab) * self.score(x_t, t)

    def __call__(self, x_t: np.ndarray, t: int) -> np.ndarray:
        return self.predict_eps(x_t, t)
