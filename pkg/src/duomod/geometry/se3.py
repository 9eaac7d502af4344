"""SE(3) Lie-group math: poses, twists, exp/log, composition.

All core routines are vectorized over arbitrary leading axes so batched
consumers (coordination energies, collision sweeps) reuse the same formulas
the scalar Pose/Twist API is built on. Angles are radians, translations meters.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import AngleAtPi

_EPS_SMALL = 1e-8          # below this angle, use Taylor branches
_PI_GUARD = 1e-6           # log is refused within this distance of pi


def hat(w: np.ndarray) -> np.ndarray:
    """Skew-symmetric matrix of a 3-vector, batched over leading axes."""
    w = np.asarray(w, dtype=float)
    out = np.zeros(w.shape[:-1] + (3, 3), dtype=float)
    out[..., 0, 1] = -w[..., 2]
    out[..., 0, 2] = w[..., 1]
    out[..., 1, 0] = w[..., 2]
    out[..., 1, 2] = -w[..., 0]
    out[..., 2, 0] = -w[..., 1]
    out[..., 2, 1] = w[..., 0]
    return out


def vee(W: np.ndarray) -> np.ndarray:
    """Inverse of hat; takes the skew part of W."""
    W = np.asarray(W, dtype=float)
    return 0.5 * np.stack(
        [W[..., 2, 1] - W[..., 1, 2],
         W[..., 0, 2] - W[..., 2, 0],
         W[..., 1, 0] - W[..., 0, 1]],
        axis=-1,
    )


def rot_exp(w: np.ndarray) -> np.ndarray:
    """SO(3) exponential (Rodrigues), batched."""
    w = np.asarray(w, dtype=float)
    theta = np.linalg.norm(w, axis=-1)
    W = hat(w)
    W2 = W @ W
    small = theta < _EPS_SMALL
    th = np.where(small, 1.0, theta)  # avoid 0/0; Taylor branch overrides
    a = np.where(small, 1.0 - theta**2 / 6.0, np.sin(th) / th)
    b = np.where(small, 0.5 - theta**2 / 24.0, (1.0 - np.cos(th)) / th**2)
    eye = np.broadcast_to(np.eye(3), W.shape)
    return eye + a[..., None, None] * W + b[..., None, None] * W2


def rot_angle(R: np.ndarray) -> np.ndarray:
    """Rotation angle in [0, pi], batched."""
    R = np.asarray(R, dtype=float)
    tr = np.trace(R, axis1=-2, axis2=-1)
    return np.arccos(np.clip((tr - 1.0) / 2.0, -1.0, 1.0))


def rot_log(R: np.ndarray, *, guard_pi: bool = True) -> np.ndarray:
    """SO(3) logarithm as a rotation vector, batched.

    Raises AngleAtPi when any angle is within the pi guard and guard_pi is set.
    """
    R = np.asarray(R, dtype=float)
    theta = rot_angle(R)
    if guard_pi and np.any(theta > np.pi - _PI_GUARD):
        raise AngleAtPi("rotation angle within 1e-6 of pi; logarithm not unique")
    s = 0.5 * vee(R - np.swapaxes(R, -1, -2))  # = sin(theta) * axis
    small = theta < _EPS_SMALL
    th = np.where(small, 1.0, theta)
    scale = np.where(small, 1.0 + theta**2 / 6.0, th / np.sin(th))
    w = scale[..., None] * s

    # Near pi the skew part vanishes; recover the axis from the symmetric part.
    near_pi = theta > np.pi - 1e-3
    if np.any(near_pi):
        B = (R + np.broadcast_to(np.eye(3), R.shape)) / 2.0  # ~ axis axis^T near pi
        diag = np.diagonal(B, axis1=-2, axis2=-1)
        k = np.argmax(diag, axis=-1)
        idx = np.broadcast_to(k[..., None, None], R.shape[:-1] + (1,))
        axis = np.take_along_axis(B, idx, axis=-1)[..., 0]
        norm = np.linalg.norm(axis, axis=-1, keepdims=True)
        axis = axis / np.where(norm > 0, norm, 1.0)
        flip = np.sum(axis * s, axis=-1) < 0
        axis = np.where(flip[..., None], -axis, axis)
        w = np.where(near_pi[..., None], theta[..., None] * axis, w)
    return w


def _v_matrix(w: np.ndarray) -> np.ndarray:
    """Left Jacobian V of the SE(3) exponential, batched."""
    w = np.asarray(w, dtype=float)
    theta = np.linalg.norm(w, axis=-1)
    W = hat(w)
    W2 = W @ W
    small = theta < _EPS_SMALL
    th = np.where(small, 1.0, theta)
    b = np.where(small, 0.5 - theta**2 / 24.0, (1.0 - np.cos(th)) / th**2)
    c = np.where(small, 1.0 / 6.0 - theta**2 / 120.0, (th - np.sin(th)) / th**3)
    eye = np.broadcast_to(np.eye(3), W.shape)
    return eye + b[..., None, None] * W + c[..., None, None] * W2


def _v_inverse(w: np.ndarray) -> np.ndarray:
    """Inverse of the left Jacobian, batched."""
    w = np.asarray(w, dtype=float)
    theta = np.linalg.norm(w, axis=-1)
    W = hat(w)
    W2 = W @ W
    small = theta < _EPS_SMALL
    th = np.where(small, 1.0, theta)
    half = th / 2.0
    coef = np.where(
        small,
        1.0 / 12.0 + theta**2 / 720.0,
        (1.0 - half * np.cos(half) / np.sin(half)) / th**2,
    )
    eye = np.broadcast_to(np.eye(3), W.shape)
    return eye - 0.5 * W + coef[..., None, None] * W2


def transform_exp(rot_vec: np.ndarray, trans_vec: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """SE(3) exponential of a twist, batched; returns (R, t)."""
    R = rot_exp(rot_vec)
    V = _v_matrix(rot_vec)
    t = (V @ np.asarray(trans_vec, dtype=float)[..., None])[..., 0]
    return R, t


def transform_log(R: np.ndarray, t: np.ndarray, *, guard_pi: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """SE(3) logarithm, batched; returns (rotational, translational) twist parts."""
    w = rot_log(R, guard_pi=guard_pi)
    Vinv = _v_inverse(w)
    v = (Vinv @ np.asarray(t, dtype=float)[..., None])[..., 0]
    return w, v


def nearest_rotation(M: np.ndarray) -> np.ndarray:
    """Nearest special-orthogonal matrix via SVD polar decomposition, batched."""
    U, _, Vt = np.linalg.svd(np.asarray(M, dtype=float))
    R = U @ Vt
    det = np.linalg.det(R)
    # Flip the last singular direction where det is -1.
    U = U.copy()
    U[..., :, -1] *= np.where(det < 0, -1.0, 1.0)[..., None]
    return U @ Vt


@dataclass(frozen=True)
class Twist:
    """Element of se(3): rotational part (rad) and translational part (m)."""

    rotational: np.ndarray
    translational: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "rotational", np.asarray(self.rotational, dtype=float).reshape(3))
        object.__setattr__(self, "translational", np.asarray(self.translational, dtype=float).reshape(3))

    def as_vector(self) -> np.ndarray:
        """(rotational, translational) stacked into a 6-vector."""
        return np.concatenate([self.rotational, self.translational])

    @staticmethod
    def from_vector(v: np.ndarray) -> "Twist":
        v = np.asarray(v, dtype=float).reshape(6)
        return Twist(v[:3], v[3:])

    def norm(self) -> float:
        return float(np.linalg.norm(self.as_vector()))


@dataclass(frozen=True)
class Pose:
    """Rigid transform: orthonormal rotation matrix plus translation."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "rotation", np.asarray(self.rotation, dtype=float).reshape(3, 3))
        object.__setattr__(self, "translation", np.asarray(self.translation, dtype=float).reshape(3))

    @staticmethod
    def identity() -> "Pose":
        return Pose(np.eye(3), np.zeros(3))

    @staticmethod
    def from_planar(x: float, y: float, yaw: float) -> "Pose":
        c, s = np.cos(yaw), np.sin(yaw)
        return Pose(np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]]), np.array([x, y, 0.0]))

    def planar(self) -> tuple[float, float, float]:
        """(x, y, yaw) of a planar pose (rotation about z)."""
        yaw = float(np.arctan2(self.rotation[1, 0], self.rotation[0, 0]))
        return float(self.translation[0]), float(self.translation[1]), yaw

    def compose(self, other: "Pose") -> "Pose":
        return Pose(self.rotation @ other.rotation,
                    self.rotation @ other.translation + self.translation)

    def inverse(self) -> "Pose":
        rt = self.rotation.T
        return Pose(rt, -rt @ self.translation)

    def apply(self, point: np.ndarray) -> np.ndarray:
        return self.rotation @ np.asarray(point, dtype=float) + self.translation

    def renormalized(self) -> "Pose":
        """Project the rotation back onto SO(3); use after long composition chains."""
        return Pose(nearest_rotation(self.rotation), self.translation)

    def angle(self) -> float:
        return float(rot_angle(self.rotation))

    def matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.translation
        return m

    def allclose(self, other: "Pose", tol: float = 1e-9) -> bool:
        return (np.linalg.norm(self.rotation - other.rotation) <= tol
                and np.linalg.norm(self.translation - other.translation) <= tol)


def se3_exp(v: Twist) -> Pose:
    """Exponential map se(3) -> SE(3). exp of the zero twist is the identity."""
    R, t = transform_exp(v.rotational, v.translational)
    return Pose(R, t)


def se3_log(p: Pose) -> Twist:
    """Logarithm SE(3) -> se(3); raises AngleAtPi near the pi singularity."""
    w, t = transform_log(p.rotation, p.translation)
    return Twist(w, t)


def se3_compose(a: Pose, b: Pose) -> Pose:
    return a.compose(b)


def se3_inverse(a: Pose) -> Pose:
    return a.inverse()
