"""Core diffusion operations: forward noising, reverse steps, score conversion.

All functions treat the sample as an arbitrary-shape array; batching is the
caller's concern (leading axes pass straight through).
"""

from __future__ import annotations

import numpy as np

from ..errors import BadStepCount, ShapeMismatch
from .schedule import NoiseSchedule


def _check_shapes(*arrays: np.ndarray) -> None:
    shapes = {np.shape(a) for a in arrays}
    if len(shapes) > 1:
        raise ShapeMismatch(f"arrays must share a shape, got {sorted(shapes)}")


def forward_diffuse(x0: np.ndarray, t: int, eps: np.ndarray, s: NoiseSchedule) -> np.ndarray:
    """Closed-form corruption: sqrt(ab_t) x0 + sqrt(1 - ab_t) eps."""
    x0 = np.asarray(x0, dtype=float)
    eps = np.asarray(eps, dtype=float)
    _check_shapes(x0, eps)
    ab = s.alpha_bar_at(t)
    return np.sqrt(ab) * x0 + np.sqrt(1.0 - ab) * eps


def ddpm_step(x_t: np.ndarray, eps_hat: np.ndarray, t: int, s: NoiseSchedule,
              noise: np.ndarray) -> np.ndarray:
    """One reverse step t -> t-1 with caller-supplied injection noise.

    Callers pass zero noise at t = 1 (the final step).
    """
    x_t = np.asarray(x_t, dtype=float)
    eps_hat = np.asarray(eps_hat, dtype=float)
    noise = np.asarray(noise, dtype=float)
    _check_shapes(x_t, eps_hat, noise)
    if t < 1:
        raise BadStepCount("reverse step needs t >= 1")
    alpha = s.alpha_at(t)
    ab = s.alpha_bar_at(t)
    mean = (x_t - (1.0 - alpha) / np.sqrt(1.0 - ab) * eps_hat) / np.sqrt(alpha)
    return mean + s.sigma_at(t) * noise


def eps_to_score(eps_hat: np.ndarray, t: int, s: NoiseSchedule) -> np.ndarray:
    """Score of the perturbed density from the noise prediction: -eps / sqrt(1 - ab_t)."""
    if t < 1:
        raise BadStepCount("score conversion needs t >= 1")
    ab = s.alpha_bar_at(t)
    return -np.asarray(eps_hat, dtype=float) / np.sqrt(1.0 - ab)


def score_to_eps(score: np.ndarray, t: int, s: NoiseSchedule) -> np.ndarray:
    """Inverse of eps_to_score."""
    if t < 1:
        raise BadStepCount("score conversion needs t >= 1")
    ab = s.alpha_bar_at(t)
    return -np.asarray(score, dtype=float) * np.sqrt(1.0 - ab)


def estimate_clean(x_t: np.ndarray, eps_hat: np.ndarray, t: int, s: NoiseSchedule) -> np.ndarray:
    """Algebraic inversion of the forward corruption using the predicted noise."""
    x_t = np.asarray(x_t, dtype=float)
    eps_hat = np.asarray(eps_hat, dtype=float)
    if t < 1:
        raise BadStepCount("clean estimate needs t >= 1")
    ab = s.alpha_bar_at(t)
    return (x_t - np.sqrt(1.0 - ab) * eps_hat) / np.sqrt(ab)


def reverse_chain(denoiser, shape: tuple, s: NoiseSchedule, rng: np.random.Generator) -> np.ndarray:
    """Full ancestral sampling loop from pure noise down to clean samples.

    `denoiser` maps (x_t, t) -> eps_hat, with t on this schedule's grid.
    """
    x = rng.standard_normal(shape)
    for t in range(s.T, 0, -1):
        eps_hat = denoiser(x, t)
        noise = rng.standard_normal(shape) if t > 1 else np.zeros(shape)
        x = ddpm_step(x, eps_hat, t, s, noise)
    return x
