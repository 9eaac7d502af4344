"""Noise schedules, forward/reverse diffusion steps, and analytic oracles."""

from .schedule import NoiseSchedule, make_schedule, LINEAR, COSINE
from .ops import (
    forward_diffuse,
    ddpm_step,
    eps_to_score,
    score_to_eps,
    estimate_clean,
    reverse_chain,
)
from .analytic import AnalyticGaussianDenoiser

__all__ = [
    "NoiseSchedule", "make_schedule", "LINEAR", "COSINE",
    "forward_diffuse", "ddpm_step", "eps_to_score", "score_to_eps",
    "estimate_clean", "reverse_chain", "AnalyticGaussianDenoiser",
]
