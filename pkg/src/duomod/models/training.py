"""Denoiser training: composite loss, AdamW, epoch loop, gradient checks.

The training objective is the standard noise-prediction loss plus two
auxiliary terms computed on the estimated clean motions: a batch-diversity
bonus (negative mean pairwise squared distance) and a second-difference
smoothness penalty.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..diffusion import NoiseSchedule, make_schedule
from ..errors import BatchTooSmall, EmptyDataset, NonFiniteLoss, ShapeMismatch, TooShort
from ..rng import stream
from . import autodiff as ad
from .autodiff import Tensor
from .transformer import DenoiserParams, Descriptor, forward, init_params, wrap_store


@dataclass
class TrainConfig:
    """Knobs for a denoiser training run."""

    learning_rate: float = 1e-4
    batch_size: int = 64
    lambda_div: float = 5e-4      # weight of the diversity bonus
    lambda_smooth: float = 5e-3   # weight of the smoothness penalty
    epochs: int = 10
    seed: int = 0
    t_steps: int = 50
    schedule_kind: str = "cosine"
    weight_decay: float = 0.0
    lr_decay: float = 1.0         # multiplicative per-epoch learning-rate factor
    aux_t_cutoff: int | None = None  # apply auxiliaries only for t <= cutoff (None = all t)

    def __post_init__(self):
        if self.learning_rate <= 0 or self.batch_size <= 0 or self.epochs < 0:
            raise ValueError("rates, batch size, and epochs must be positive")
        if self.lambda_div < 0 or self.lambda_smooth < 0:
            raise ValueError("loss weights must be >= 0")


def loss_diversity(batch_x0hat: np.ndarray) -> float:
    """Negative mean pairwise squared distance over a batch of motions."""
    x = np.asarray(batch_x0hat, dtype=float)
    B = x.shape[0]
    if B < 2:
        raise BatchTooSmall("diversity needs a batch of at least 2")
    flat = x.reshape(B, -1)
    sq = np.sum(flat * flat, axis=1)
    total = 2.0 * B * np.sum(sq) - 2.0 * np.sum(np.sum(flat, axis=0) ** 2)
    return float(-total / (B * (B - 1)))


def loss_smooth(x0hat: np.ndarray) -> float:
    """Sum of squared second differences along the waypoint axis of one motion."""
    x = np.asarray(x0hat, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[0] < 3:
        raise TooShort("smoothness needs at least 3 waypoints")
    d2 = x[2:] - 2.0 * x[1:-1] + x[:-2]
    return float(np.sum(d2 * d2))


def _diversity_graph(x0hat: Tensor) -> Tensor:
    B = x0hat.shape[0]
    flat = x0hat.reshape(B, -1)
    sq_sum = flat.square().sum()
    col = flat.sum(axis=0)
    cross = (col * col).sum()
    total = 2.0 * B * sq_sum - 2.0 * cross
    return total * (-1.0 / (B * (B - 1)))


def _smooth_graph(x0hat: Tensor) -> Tensor:
    d2 = x0hat[:, 2:, :] - 2.0 * x0hat[:, 1:-1, :] + x0hat[:, :-2, :]
    per_sample = d2.square().sum(axis=2).sum(axis=1)
    return per_sample.mean()


@dataclass
class AdamW:
    """Decoupled-weight-decay Adam over a named parameter store."""

    lr: float
    weight_decay: float = 0.0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    _m: dict = field(default_factory=dict)
    _v: dict = field(default_factory=dict)
    _step: int = 0

    def update(self, store: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        self._step += 1
        b1c = 1.0 - self.beta1**self._step
        b2c = 1.0 - self.beta2**self._step
        with np.errstate(over="ignore", invalid="ignore"):
            for name, g in grads.items():
                m = self._m.setdefault(name, np.zeros_like(store[name]))
                v = self._v.setdefault(name, np.zeros_like(store[name]))
                m += (1.0 - self.beta1) * (g - m)
                v += (1.0 - self.beta2) * (g * g - v)
                step = (m / b1c) / (np.sqrt(v / b2c) + self.eps)
                store[name] -= self.lr * (step + self.weight_decay * store[name])


def composite_loss(params: dict[str, Tensor], d: Descriptor, x0: np.ndarray,
                   t: np.ndarray, eps: np.ndarray, schedule: NoiseSchedule,
                   cfg: TrainConfig, obs: np.ndarray | None = None) -> tuple[Tensor, dict]:
    """Total training loss graph plus per-component floats for logging."""
    ab = schedule.alpha_bar[np.asarray(t, dtype=int) - 1][:, None, None]
    x_t = np.sqrt(ab) * x0 + np.sqrt(1.0 - ab) * eps
    eps_hat = forward(params, d, x_t, t, obs)
    l_diff = (eps_hat - eps).square().mean()
    loss = l_diff
    parts = {"diff": float(l_diff.data)}
    if cfg.lambda_div > 0 or cfg.lambda_smooth > 0:
        x0hat = (Tensor(x_t) - eps_hat * np.sqrt(1.0 - ab)) * (1.0 / np.sqrt(ab))
        if cfg.aux_t_cutoff is not None:
            # Mask out high-noise samples from the auxiliary terms.
            mask = (np.asarray(t) <= cfg.aux_t_cutoff).astype(float)[:, None, None]
            x0hat = x0hat * mask + Tensor(x0 * (1.0 - mask))
        if cfg.lambda_div > 0:
            l_div = _diversity_graph(x0hat)
            loss = loss + cfg.lambda_div * l_div
            parts["div"] = float(l_div.data)
        if cfg.lambda_smooth > 0:
            l_smooth = _smooth_graph(x0hat)
            loss = loss + cfg.lambda_smooth * l_smooth
            parts["smooth"] = float(l_smooth.data)
    parts["total"] = float(loss.data)
    return loss, parts


def normalization_stats(data: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    flat = data.reshape(-1, data.shape[-1])
    mean = flat.mean(axis=0)
    std = flat.std(axis=0)
    return mean, np.where(std < 1e-6, 1.0, std)


def train_denoiser(data: np.ndarray, cfg: TrainConfig, descriptor: Descriptor | None = None,
                   obs: np.ndarray | None = None) -> tuple[DenoiserParams, list[dict]]:
    """Train a denoiser on raw (un-normalized) motion tensors.

    data: (M, N, D); obs: (M, obs_dim) for the conditioned policy variant.
    Returns the trained parameters and the per-epoch training log.
    """
    data = np.asarray(data, dtype=float)
    if data.ndim != 3 or data.shape[0] == 0:
        raise EmptyDataset("training data must be a non-empty (M, N, D) array")
    M, N, D = data.shape
    obs_dim = 0
    if obs is not None:
        obs = np.asarray(obs, dtype=float)
        if obs.ndim != 2 or obs.shape[0] != M:
            raise ShapeMismatch("observations must be (M, obs_dim) aligned with motions")
        obs_dim = obs.shape[1]
    if descriptor is None:
        descriptor = Descriptor(n_waypoints=N, d_motion=D, t_steps=cfg.t_steps, obs_dim=obs_dim)
    if descriptor.n_waypoints != N or descriptor.d_motion != D or descriptor.obs_dim != obs_dim:
        raise ShapeMismatch("descriptor inconsistent with training data")

    mean, std = normalization_stats(data)
    norm = (data - mean) / std
    if obs is not None:
        obs_mean, obs_std = normalization_stats(obs)
        obs_norm = (obs - obs_mean) / obs_std
    else:
        obs_mean = obs_std = None
        obs_norm = None

    model = init_params(descriptor, cfg.seed)
    model.norm_mean, model.norm_std = mean, std
    if obs is not None:
        model.obs_mean, model.obs_std = obs_mean, obs_std
    schedule = make_schedule(descriptor.t_steps, cfg.schedule_kind)
    opt = AdamW(lr=cfg.learning_rate, weight_decay=cfg.weight_decay)
    order_rng = stream(cfg.seed, "train-order")
    noise_rng = stream(cfg.seed, "train-noise")
    B = min(cfg.batch_size, M)
    log: list[dict] = []

    for epoch in range(cfg.epochs):
        opt.lr = cfg.learning_rate * cfg.lr_decay**epoch
        perm = order_rng.permutation(M)
        sums: dict[str, float] = {}
        n_steps = 0
        for start in range(0, M, B):
            idx = perm[start:start + B]
            if idx.size < 2:
                continue  # diversity needs >= 2; drop ragged tail singleton
            x0 = norm[idx]
            t = noise_rng.integers(1, descriptor.t_steps + 1, size=idx.size)
            eps = noise_rng.standard_normal(x0.shape)
            params = wrap_store(model.store)
            batch_obs = obs_norm[idx] if obs_norm is not None else None
            loss, parts = composite_loss(params, descriptor, x0, t, eps, schedule, cfg, batch_obs)
            if not np.isfinite(parts["total"]):
                raise NonFiniteLoss(
                    f"non-finite loss at epoch {epoch} step {n_steps}: {parts}")
            loss.backward()
            grads = {k: v.grad for k, v in params.items() if v.grad is not None}
            opt.update(model.store, grads)
            for k, v in parts.items():
                sums[k] = sums.get(k, 0.0) + v
            n_steps += 1
        record = {"epoch": epoch, "steps": n_steps}
        record.update({k: sums[k] / max(n_steps, 1) for k in sorted(sums)})
        log.append(record)
    model.meta["train_config"] = {
        "learning_rate": cfg.learning_rate, "batch_size": cfg.batch_size,
        "lambda_div": cfg.lambda_div, "lambda_smooth": cfg.lambda_smooth,
        "epochs": cfg.epochs, "seed": cfg.seed, "schedule_kind": cfg.schedule_kind,
    }
    return model, log


def evaluate_denoising_loss(m: DenoiserParams, data: np.ndarray, seed: int = 0,
                            n_draws: int = 50, obs: np.ndarray | None = None) -> float:
    """Plain noise-prediction loss averaged over fixed (sample, t, eps) draws."""
    from .transformer import predict_eps

    data = np.asarray(data, dtype=float)
    norm = (data - m.norm_mean) / m.norm_std
    obs_n = None
    if obs is not None:
        obs_n = (np.asarray(obs, dtype=float) - m.obs_mean) / m.obs_std
    schedule = make_schedule(m.descriptor.t_steps,
                             m.meta.get("train_config", {}).get("schedule_kind", "cosine"))
    rng = stream(seed, "eval-loss")
    total = 0.0
    for _ in range(n_draws):
        idx = rng.integers(0, norm.shape[0], size=min(64, norm.shape[0]))
        t = rng.integers(1, m.descriptor.t_steps + 1, size=idx.size)
        eps = rng.standard_normal(norm[idx].shape)
        ab = schedule.alpha_bar[t - 1][:, None, None]
        x_t = np.sqrt(ab) * norm[idx] + np.sqrt(1.0 - ab) * eps
        eps_hat = predict_eps(m, x_t, t, obs_n[idx] if obs_n is not None else None)
        total += float(np.mean((eps_hat - eps) ** 2))
    return total / n_draws


def gradient_check(m: DenoiserParams, probe_x0: np.ndarray, probe_t: np.ndarray,
                   probe_eps: np.ndarray, obs: np.ndarray | None = None,
                   cfg: TrainConfig | None = None, n_entries: int = 40,
                   h: float = 1e-5, seed: int = 0) -> float:
    """Max relative error of analytic gradients vs central finite differences."""
    cfg = cfg or TrainConfig(lambda_div=1e-3, lambda_smooth=1e-3)
    schedule = make_schedule(m.descriptor.t_steps, cfg.schedule_kind)

    def loss_value(store: dict[str, np.ndarray]) -> float:
        with ad.no_grad():
            params = {k: Tensor(v) for k, v in store.items()}
            loss, _ = composite_loss(params, m.descriptor, probe_x0, probe_t,
                                     probe_eps, schedule, cfg, obs)
        return float(loss.data)

    params = wrap_store(m.store)
    loss, _ = composite_loss(params, m.descriptor, probe_x0, probe_t, probe_eps,
                             schedule, cfg, obs)
    loss.backward()
    rng = stream(seed, "grad-check")
    worst = 0.0
    names = sorted(m.store)
    for _ in range(n_entries):
        name = names[int(rng.integers(len(names)))]
        flat_idx = int(rng.integers(m.store[name].size))
        idx = np.unravel_index(flat_idx, m.store[name].shape)
        store_p = {k: v.copy() for k, v in m.store.items()}
        store_m = {k: v.copy() for k, v in m.store.items()}
        store_p[name][idx] += h
        store_m[name][idx] -= h
        fd = (loss_value(store_p) - loss_value(store_m)) / (2.0 * h)
        analytic = params[name].grad[idx] if params[name].grad is not None else 0.0
        scale = max(abs(fd), abs(analytic), 1e-8)
        worst = max(worst, abs(fd - analytic) / scale)
    return worst


def sample_denoiser(m: DenoiserParams, n: int, sample_steps: int, seed: int,
                    obs: np.ndarray | None = None) -> np.ndarray:
    """Ancestral sampling; returns de-normalized motion tensors (n, N, D)."""
    from .transformer import predict_eps

    d = m.descriptor
    schedule = make_schedule(d.t_steps, m.meta.get("train_config", {}).get("schedule_kind", "cosine"))
    sub = schedule.strided(sample_steps)
    rng = stream(seed, "sample")
    x = rng.standard_normal((n, d.n_waypoints, d.d_motion))
    if obs is not None:
        obs_n = (np.asarray(obs, dtype=float) - m.obs_mean) / m.obs_std
        obs_n = np.broadcast_to(obs_n, (n, d.obs_dim)) if obs_n.ndim == 1 else obs_n
    else:
        obs_n = None
    for t in range(sub.T, 0, -1):
        eps_hat = predict_eps(m, x, np.full(n, sub.base_step(t)), obs_n)
        noise = rng.standard_normal(x.shape) if t > 1 else np.zeros_like(x)
        from ..diffusion import ddpm_step

        x = ddpm_step(x, eps_hat, t, sub, noise)
    return x * m.norm_std + m.norm_mean
