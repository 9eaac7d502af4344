"""Bimanual motion representations and codecs.

Three forms of the same motion:
  * BimanualMotion - absolute world-frame pose arrays per arm plus gripper
    commands; what the simulator executes.
  * twist record (N, 14) - per waypoint and arm, the Lie logarithm of the
    displacement from the start pose plus the gripper command; the on-disk
    dataset format (waypoint 0 encodes zero displacement).
  * model tensor (N, 20) - per waypoint and arm, displacement position (3) +
    rotation as the first two matrix columns (6) + gripper (1); what the
    denoisers are trained on (continuous under Gaussian noising).

Decoding a model tensor anchors waypoint 0 exactly at the given start poses.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeMismatch
from .geometry import Pose, transform_exp, transform_log

N_WAYPOINTS = 32
MODEL_DIM = 20          # 2 arms x (pos 3 + rot6d 6 + grip 1)
TWIST_DIM = 14          # 2 arms x (twist 6 + grip 1)
GRIP_CLOSED = 0.5       # gripper command above this holds an object

# Per-arm slices inside a model-tensor waypoint.
_POS = slice(0, 3)
_ROT6 = slice(3, 9)
_GRIP = 9
_ARM_WIDTH = 10


@dataclass(frozen=True)
class BimanualMotion:
    """Absolute dual end-effector trajectories with gripper commands."""

    left_rot: np.ndarray    # (N, 3, 3)
    left_pos: np.ndarray    # (N, 3)
    right_rot: np.ndarray
    right_pos: np.ndarray
    grip_left: np.ndarray   # (N,)
    grip_right: np.ndarray

    def __post_init__(self):
        for name in ("left_rot", "right_rot"):
            arr = np.asarray(getattr(self, name), dtype=float)
            object.__setattr__(self, name, arr)
        for name in ("left_pos", "right_pos"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        for name in ("grip_left", "grip_right"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float).reshape(-1))
        n = self.left_pos.shape[0]
        shapes_ok = (self.left_rot.shape == (n, 3, 3) and self.right_rot.shape == (n, 3, 3)
                     and self.right_pos.shape == (n, 3) and self.grip_left.shape == (n,)
                     and self.grip_right.shape == (n,))
        if not shapes_ok:
            raise ShapeMismatch("inconsistent waypoint counts across motion arrays")

    @property
    def n_waypoints(self) -> int:
        return self.left_pos.shape[0]

    def pose(self, side: str, n: int) -> Pose:
        if side == "left":
            return Pose(self.left_rot[n], self.left_pos[n])
        return Pose(self.right_rot[n], self.right_pos[n])

    def positions(self, side: str) -> np.ndarray:
        return self.left_pos if side == "left" else self.right_pos

    def grip(self, side: str) -> np.ndarray:
        return self.grip_left if side == "left" else self.grip_right

    def slice_from(self, n: int) -> "BimanualMotion":
        return BimanualMotion(self.left_rot[n:], self.left_pos[n:],
                              self.right_rot[n:], self.right_pos[n:],
                              self.grip_left[n:], self.grip_right[n:])


def rot6d_to_matrix(sixd: np.ndarray) -> np.ndarray:
    """Gram-Schmidt two stacked columns into an orthonormal rotation, batched."""
    sixd = np.asarray(sixd, dtype=float)
    a1 = sixd[..., 0:3]
    a2 = sixd[..., 3:6]
    n1 = np.linalg.norm(a1, axis=-1, keepdims=True)
    b1 = a1 / np.where(n1 > 1e-12, n1, 1.0)
    a2p = a2 - np.sum(b1 * a2, axis=-1, keepdims=True) * b1
    n2 = np.linalg.norm(a2p, axis=-1, keepdims=True)
    # Degenerate second column: fall back to any perpendicular direction.
    fallback = np.cross(b1, np.broadcast_to([0.0, 0.0, 1.0], b1.shape))
    fb_norm = np.linalg.norm(fallback, axis=-1, keepdims=True)
    fallback2 = np.cross(b1, np.broadcast_to([0.0, 1.0, 0.0], b1.shape))
    fallback = np.where(fb_norm > 1e-6, fallback, fallback2)
    fallback = fallback / np.maximum(np.linalg.norm(fallback, axis=-1, keepdims=True), 1e-12)
    b2 = np.where(n2 > 1e-9, a2p / np.where(n2 > 1e-12, n2, 1.0), fallback)
    b3 = np.cross(b1, b2)
    return np.stack([b1, b2, b3], axis=-1)


def matrix_to_rot6d(R: np.ndarray) -> np.ndarray:
    R = np.asarray(R, dtype=float)
    return np.concatenate([R[..., :, 0], R[..., :, 1]], axis=-1)


def _arm_block(x: np.ndarray, arm_index: int) -> np.ndarray:
    lo = arm_index * _ARM_WIDTH
    return x[..., lo:lo + _ARM_WIDTH]


def to_relative(m: BimanualMotion, start_left: Pose, start_right: Pose) -> np.ndarray:
    """Twist record (N, 14): per-arm Log(start^-1 pose_n) + gripper command."""
    inv_l, inv_r = start_left.inverse(), start_right.inverse()
    rel_l_R = np.einsum("ij,njk->nik", inv_l.rotation, m.left_rot)
    rel_l_p = np.einsum("ij,nj->ni", inv_l.rotation, m.left_pos) + inv_l.translation
    rel_r_R = np.einsum("ij,njk->nik", inv_r.rotation, m.right_rot)
    rel_r_p = np.einsum("ij,nj->ni", inv_r.rotation, m.right_pos) + inv_r.translation
    wl, vl = transform_log(rel_l_R, rel_l_p)
    wr, vr = transform_log(rel_r_R, rel_r_p)
    return np.concatenate(
        [wl, vl, m.grip_left[:, None], wr, vr, m.grip_right[:, None]], axis=1)


def from_relative(rel: np.ndarray, start_left: Pose, start_right: Pose) -> BimanualMotion:
    """Inverse of to_relative."""
    rel = np.asarray(rel, dtype=float)
    if rel.ndim != 2 or rel.shape[1] != TWIST_DIM:
        raise ShapeMismatch(f"twist record must be (N, {TWIST_DIM}), got {rel.shape}")
    Rl, pl = transform_exp(rel[:, 0:3], rel[:, 3:6])
    Rr, pr = transform_exp(rel[:, 7:10], rel[:, 10:13])
    abs_l_R = np.einsum("ij,njk->nik", start_left.rotation, Rl)
    abs_l_p = np.einsum("ij,nj->ni", start_left.rotation, pl) + start_left.translation
    abs_r_R = np.einsum("ij,njk->nik", start_right.rotation, Rr)
    abs_r_p = np.einsum("ij,nj->ni", start_right.rotation, pr) + start_right.translation
    return BimanualMotion(abs_l_R, abs_l_p, abs_r_R, abs_r_p, rel[:, 6], rel[:, 13])


def twist_record_to_tensor(rel: np.ndarray) -> np.ndarray:
    """Model tensor (..., N, 20) of twist records; displacements stay start-relative."""
    rel = np.asarray(rel, dtype=float)
    if rel.shape[-1] != TWIST_DIM:
        raise ShapeMismatch(f"twist record last axis must be {TWIST_DIM}, got {rel.shape}")
    out = np.empty(rel.shape[:-1] + (MODEL_DIM,))
    for arm, (w_sl, v_sl, g_idx) in enumerate(
            [(slice(0, 3), slice(3, 6), 6), (slice(7, 10), slice(10, 13), 13)]):
        R, p = transform_exp(rel[..., w_sl], rel[..., v_sl])
        block = _arm_block(out, arm)
        block[..., _POS] = p
        block[..., _ROT6] = matrix_to_rot6d(R)
        block[..., _GRIP] = rel[..., g_idx]
    return out


def tensor_rel_poses(x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Orthonormalized relative poses of a model tensor, batched over leading axes.

    Returns (R_left, p_left, R_right, p_right) with shapes (..., N, 3, 3)/(..., N, 3).
    """
    x = np.asarray(x, dtype=float)
    left = _arm_block(x, 0)
    right = _arm_block(x, 1)
    return (rot6d_to_matrix(left[..., _ROT6]), left[..., _POS],
            rot6d_to_matrix(right[..., _ROT6]), right[..., _POS])


@dataclass(frozen=True)
class MotionCodec:
    """Maps normalized model tensors to absolute motions for given start poses."""

    start_left: Pose
    start_right: Pose
    norm_mean: np.ndarray
    norm_std: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "norm_mean", np.asarray(self.norm_mean, dtype=float).reshape(MODEL_DIM))
        object.__setattr__(self, "norm_std", np.asarray(self.norm_std, dtype=float).reshape(MODEL_DIM))

    def denormalize(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x, dtype=float) * self.norm_std + self.norm_mean

    def normalize(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x, dtype=float) - self.norm_mean) / self.norm_std

    def pose_arrays(self, x_norm: np.ndarray) -> tuple[np.ndarray, ...]:
        """Absolute pose arrays for a batch of normalized tensors.

        x_norm: (..., N, 20). Returns (R_l, p_l, R_r, p_r, grip_l, grip_r);
        waypoint 0 is re-anchored exactly onto the start poses.
        """
        raw = self.denormalize(x_norm)
        Rl, pl, Rr, pr = tensor_rel_poses(raw)
        gl = _arm_block(raw, 0)[..., _GRIP]
        gr = _arm_block(raw, 1)[..., _GRIP]

        def anchor(R, p, start: Pose):
            # left-multiply by start * rel_0^-1 so waypoint 0 lands on start
            R0 = R[..., 0:1, :, :]
            p0 = p[..., 0:1, :]
            R0t = np.swapaxes(R0, -1, -2)
            Rrel = R0t @ R
            prel = (R0t @ (p - p0)[..., None])[..., 0]
            Rw = start.rotation @ Rrel
            pw = (start.rotation @ prel[..., None])[..., 0] + start.translation
            return Rw, pw

        Rl, pl = anchor(Rl, pl, self.start_left)
        Rr, pr = anchor(Rr, pr, self.start_right)
        return Rl, pl, Rr, pr, gl, gr

    def decode(self, x_norm: np.ndarray) -> BimanualMotion:
        """Single normalized tensor (N, 20) -> absolute motion."""
        Rl, pl, Rr, pr, gl, gr = self.pose_arrays(x_norm)
        return BimanualMotion(Rl, pl, Rr, pr, np.clip(gl, 0.0, 1.0), np.clip(gr, 0.0, 1.0))

    def decode_batch(self, x_norm: np.ndarray) -> list[BimanualMotion]:
        Rl, pl, Rr, pr, gl, gr = self.pose_arrays(x_norm)
        return [BimanualMotion(Rl[i], pl[i], Rr[i], pr[i],
                               np.clip(gl[i], 0.0, 1.0), np.clip(gr[i], 0.0, 1.0))
                for i in range(x_norm.shape[0])]

    def encode(self, m: BimanualMotion) -> np.ndarray:
        """Absolute motion -> normalized model tensor relative to the start poses."""
        rel = to_relative(m, self.start_left, self.start_right)
        return self.normalize(twist_record_to_tensor(rel))
