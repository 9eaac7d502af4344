"""Encoder-only transformer denoiser for dual-arm motion tensors.

Waypoints are tokens; the diffusion timestep enters as a learned embedding
token prepended to the sequence, and (for the observation-conditioned policy
variant) the observation enters as one more prepended token. The output head
is zero-initialized so an untrained model predicts zero noise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ShapeMismatch
from ..rng import stream
from . import autodiff as ad
from .autodiff import Tensor


@dataclass(frozen=True)
class Descriptor:
    """Architecture and data-space description stored inside checkpoints."""

    n_waypoints: int
    d_motion: int
    t_steps: int
    token_dim: int = 64
    n_layers: int = 4
    n_heads: int = 4
    ff_dim: int = 256
    obs_dim: int = 0  # 0 = unconditional prior

    def to_dict(self) -> dict:
        return {k: int(getattr(self, k)) for k in (
            "n_waypoints", "d_motion", "t_steps", "token_dim",
            "n_layers", "n_heads", "ff_dim", "obs_dim")}

    @staticmethod
    def from_dict(d: dict) -> "Descriptor":
        return Descriptor(**{k: int(v) for k, v in d.items()})


@dataclass
class DenoiserParams:
    """Flat parameter store plus descriptor and data normalization stats."""

    descriptor: Descriptor
    store: dict[str, np.ndarray]
    norm_mean: np.ndarray = None   # (d_motion,) data normalization
    norm_std: np.ndarray = None
    obs_mean: np.ndarray = None    # (obs_dim,) observation normalization
    obs_std: np.ndarray = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        d = self.descriptor
        if self.norm_mean is None:
            self.norm_mean = np.zeros(d.d_motion)
        if self.norm_std is None:
            self.norm_std = np.ones(d.d_motion)
        if self.obs_mean is None:
            self.obs_mean = np.zeros(d.obs_dim)
        if self.obs_std is None:
            self.obs_std = np.ones(d.obs_dim)

    def n_parameters(self) -> int:
        return sum(v.size for v in self.store.values())

    def copy(self) -> "DenoiserParams":
        return DenoiserParams(
            descriptor=self.descriptor,
            store={k: v.copy() for k, v in self.store.items()},
            norm_mean=self.norm_mean.copy(), norm_std=self.norm_std.copy(),
            obs_mean=self.obs_mean.copy(), obs_std=self.obs_std.copy(),
            meta=dict(self.meta))


def parameter_shapes(d: Descriptor) -> dict[str, tuple]:
    shapes = {
        "in.w": (d.d_motion, d.token_dim),
        "in.b": (d.token_dim,),
        "pos": (d.n_waypoints, d.token_dim),
        "t_emb": (d.t_steps + 1, d.token_dim),
        "out.w": (d.token_dim, d.d_motion),
        "out.b": (d.d_motion,),
        "ln_f.g": (d.token_dim,),
        "ln_f.b": (d.token_dim,),
    }
    if d.obs_dim > 0:
        shapes["obs.w"] = (d.obs_dim, d.token_dim)
        shapes["obs.b"] = (d.token_dim,)
    for i in range(d.n_layers):
        p = f"layer{i}."
        shapes.update({
            p + "ln1.g": (d.token_dim,), p + "ln1.b": (d.token_dim,),
            p + "ln2.g": (d.token_dim,), p + "ln2.b": (d.token_dim,),
            p + "q.w": (d.token_dim, d.token_dim), p + "q.b": (d.token_dim,),
            p + "k.w": (d.token_dim, d.token_dim), p + "k.b": (d.token_dim,),
            p + "v.w": (d.token_dim, d.token_dim), p + "v.b": (d.token_dim,),
            p + "o.w": (d.token_dim, d.token_dim), p + "o.b": (d.token_dim,),
            p + "ff1.w": (d.token_dim, d.ff_dim), p + "ff1.b": (d.ff_dim,),
            p + "ff2.w": (d.ff_dim, d.token_dim), p + "ff2.b": (d.token_dim,),
        })
    return shapes


def init_params(d: Descriptor, seed: int) -> DenoiserParams:
    """Scaled-normal weight init, zero output head, unit layernorm gains."""
    rng = stream(seed, "denoiser-init", d.to_dict())
    store: dict[str, np.ndarray] = {}
    for name, shape in sorted(parameter_shapes(d).items()):
        if name.startswith("out."):
            store[name] = np.zeros(shape)
        elif name.endswith(".g"):
            store[name] = np.ones(shape)
        elif name.endswith(".b"):
            store[name] = np.zeros(shape)
        elif name in ("pos", "t_emb"):
            store[name] = rng.normal(scale=0.02, size=shape)
        else:
            fan_in = shape[0]
            store[name] = rng.normal(scale=1.0 / np.sqrt(fan_in), size=shape)
    return DenoiserParams(descriptor=d, store=store)


def forward(params: dict[str, Tensor], d: Descriptor, tau_t: np.ndarray,
            t: np.ndarray, obs: np.ndarray | None = None) -> Tensor:
    """Noise prediction graph. tau_t: (B, N, D); t: (B,) int; obs: (B, obs_dim)."""
    tau_t = np.asarray(tau_t, dtype=float)
    if tau_t.ndim != 3 or tau_t.shape[1] != d.n_waypoints or tau_t.shape[2] != d.d_motion:
        raise ShapeMismatch(
            f"expected motion batch (B, {d.n_waypoints}, {d.d_motion}), got {tau_t.shape}")
    B = tau_t.shape[0]
    t = np.broadcast_to(np.asarray(t, dtype=int), (B,))
    if np.any(t < 0) or np.any(t > d.t_steps):
        raise ShapeMismatch(f"timestep ids outside [0, {d.t_steps}]")

    x = Tensor(tau_t) @ params["in.w"] + params["in.b"]
    x = x + params["pos"]
    t_tok = ad.embedding(params["t_emb"], t).reshape(B, 1, d.token_dim)
    tokens = [t_tok]
    if d.obs_dim > 0:
        if obs is None:
            raise ShapeMismatch("conditioned model requires an observation")
        obs = np.asarray(obs, dtype=float)
        if obs.shape != (B, d.obs_dim):
            raise ShapeMismatch(f"expected observation batch (B, {d.obs_dim}), got {obs.shape}")
        obs_tok = (Tensor(obs) @ params["obs.w"] + params["obs.b"]).reshape(B, 1, d.token_dim)
        tokens.append(obs_tok)
    tokens.append(x)
    x = ad.concat(tokens, axis=1)
    n_prefix = len(tokens) - 1
    n_tok = d.n_waypoints + n_prefix
    dh = d.token_dim // d.n_heads

    for i in range(d.n_layers):
        p = f"layer{i}."
        h = ad.layernorm(x, params[p + "ln1.g"], params[p + "ln1.b"])
        q = (h @ params[p + "q.w"] + params[p + "q.b"]).reshape(B, n_tok, d.n_heads, dh).swapaxes(1, 2)
        k = (h @ params[p + "k.w"] + params[p + "k.b"]).reshape(B, n_tok, d.n_heads, dh).swapaxes(1, 2)
        v = (h @ params[p + "v.w"] + params[p + "v.b"]).reshape(B, n_tok, d.n_heads, dh).swapaxes(1, 2)
        att = ad.softmax((q @ k.swapaxes(2, 3)) * (1.0 / np.sqrt(dh)), axis=-1)
        o = (att @ v).swapaxes(1, 2).reshape(B, n_tok, d.token_dim)
        x = x + (o @ params[p + "o.w"] + params[p + "o.b"])
        h = ad.layernorm(x, params[p + "ln2.g"], params[p + "ln2.b"])
        ff = ad.gelu(h @ params[p + "ff1.w"] + params[p + "ff1.b"]) @ params[p + "ff2.w"] + params[p + "ff2.b"]
        x = x + ff

    x = ad.layernorm(x, params["ln_f.g"], params["ln_f.b"])
    x = x[:, n_prefix:, :]
    return x @ params["out.w"] + params["out.b"]


def wrap_store(store: dict[str, np.ndarray]) -> dict[str, Tensor]:
    return {k: Tensor(v) for k, v in store.items()}


def predict_eps(m: DenoiserParams, tau_t: np.ndarray, t, obs: np.ndarray | None = None) -> np.ndarray:
    """Inference forward pass (no tape); accepts scalar or per-sample t."""
    with ad.no_grad():
        out = forward(wrap_store(m.store), m.descriptor, tau_t, t, obs)
    return out.data
