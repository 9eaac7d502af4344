"""Trainable denoiser networks: motion prior and observation-conditioned policy."""

import numpy as np

from .transformer import DenoiserParams, Descriptor, init_params, predict_eps
from .training import (
    AdamW,
    TrainConfig,
    gradient_check,
    loss_diversity,
    loss_smooth,
    sample_denoiser,
    train_denoiser,
    normalization_stats,
)
from .checkpoint import load_checkpoint, save_checkpoint


def denoise_bmp(m: DenoiserParams, tau_t: np.ndarray, t) -> np.ndarray:
    """Noise prediction of the unconditional motion prior. tau_t: (B, N, D)."""
    return predict_eps(m, tau_t, t)


def denoise_policy(m: DenoiserParams, o: np.ndarray, tau_t: np.ndarray, t) -> np.ndarray:
    """Noise prediction of the observation-conditioned task policy."""
    o = np.asarray(o, dtype=float)
    if o.ndim == 1:
        o = np.broadcast_to(o, (np.asarray(tau_t).shape[0], o.shape[0]))
    return predict_eps(m, tau_t, t, o)


__all__ = [
    "DenoiserParams", "Descriptor", "init_params", "predict_eps",
    "AdamW", "TrainConfig", "gradient_check", "loss_diversity", "loss_smooth",
    "sample_denoiser", "train_denoiser", "normalization_stats",
    "load_checkpoint", "save_checkpoint", "denoise_bmp", "denoise_policy",
]
