"""Dual-arm kinematic chains: forward kinematics, Jacobians, dexterity, IK.

An arm is a serial chain of revolute joints; joint i rotates about its axis,
then the link extends `length` along the local +x direction. All batched
routines vectorize over a leading batch axis of joint configurations.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from ..errors import DimensionMismatch
from .se3 import Pose, rot_exp, rot_log

LEFT = "left"
RIGHT = "right"
SIDES = (LEFT, RIGHT)


@dataclass(frozen=True)
class ArmSpec:
    """Geometry of one serial arm."""

    base: Pose
    axes: np.ndarray          # (n, 3) unit rotation axes, in the joint-local frame
    lengths: np.ndarray       # (n,) link lengths, meters
    limits: np.ndarray        # (n, 2) joint limits, radians
    capsule_radii: np.ndarray  # (n,) collision capsule radius per link

    def __post_init__(self):
        object.__setattr__(self, "axes", np.asarray(self.axes, dtype=float).reshape(-1, 3))
        object.__setattr__(self, "lengths", np.asarray(self.lengths, dtype=float).reshape(-1))
        object.__setattr__(self, "limits", np.asarray(self.limits, dtype=float).reshape(-1, 2))
        object.__setattr__(self, "capsule_radii", np.asarray(self.capsule_radii, dtype=float).reshape(-1))
        n = self.axes.shape[0]
        if n < 1:
            raise DimensionMismatch("arm needs at least one joint")
        if self.lengths.shape[0] != n or self.limits.shape[0] != n or self.capsule_radii.shape[0] != n:
            raise DimensionMismatch("joint, length, limit, and radius counts must match")
        if np.any(self.lengths <= 0):
            raise DimensionMismatch("link lengths must be positive")
        if np.any(self.capsule_radii <= 0):
            raise DimensionMismatch("capsule radii must be positive")

    @property
    def n_joints(self) -> int:
        return self.axes.shape[0]

    @property
    def reach(self) -> float:
        return float(np.sum(self.lengths))


@dataclass(frozen=True)
class Embodiment:
    """Declarative description of a dual-arm platform."""

    name: str
    left: ArmSpec
    right: ArmSpec
    meta: dict = field(default_factory=dict)

    def arm(self, side: str) -> ArmSpec:
        if side == LEFT:
            return self.left
        if side == RIGHT:
            return self.right
        raise DimensionMismatch(f"unknown arm side {side!r}")

    @property
    def planar(self) -> bool:
        """True when all joints rotate about z and both bases are z-rotations only."""
        for arm in (self.left, self.right):
            if not np.allclose(np.abs(arm.axes), [0.0, 0.0, 1.0], atol=1e-12):
                return False
            if abs(arm.base.translation[2]) > 1e-12:
                return False
            if not np.allclose(arm.base.rotation[2], [0.0, 0.0, 1.0], atol=1e-12):
                return False
        return True

    def content_hash(self) -> str:
        """Stable hash of the kinematic content (dataset headers pin this)."""
        payload = {
            "name": self.name,
            "arms": {
                side: {
                    "base_r": np.round(self.arm(side).base.rotation, 12).tolist(),
                    "base_t": np.round(self.arm(side).base.translation, 12).tolist(),
                    "axes": np.round(self.arm(side).axes, 12).tolist(),
                    "lengths": np.round(self.arm(side).lengths, 12).tolist(),
                    "limits": np.round(self.arm(side).limits, 12).tolist(),
                    "radii": np.round(self.arm(side).capsule_radii, 12).tolist(),
                }
                for side in SIDES
            },
        }
        blob = json.dumps(payload, sort_keys=True).encode()
        return hashlib.blake2b(blob, digest_size=8).hexdigest()


@dataclass(frozen=True)
class JointConfig:
    """Joint angles for both arms."""

    left: np.ndarray
    right: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "left", np.asarray(self.left, dtype=float).reshape(-1))
        object.__setattr__(self, "right", np.asarray(self.right, dtype=float).reshape(-1))

    def arm(self, side: str) -> np.ndarray:
        return self.left if side == LEFT else self.right


def validate_config(e: Embodiment, q: JointConfig, *, check_limits: bool = False) -> None:
    """Check dimensions (always) and joint limits (when requested)."""
    for side in SIDES:
        arm, angles = e.arm(side), q.arm(side)
        if angles.shape[0] != arm.n_joints:
            raise DimensionMismatch(
                f"{side} arm expects {arm.n_joints} joints, got {angles.shape[0]}")
        if check_limits and (np.any(angles < arm.limits[:, 0] - 1e-9)
                             or np.any(angles > arm.limits[:, 1] + 1e-9)):
            raise DimensionMismatch(f"{side} arm joint angles outside limits")


def fk_chain(arm: ArmSpec, q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Batched FK along the chain.

    q: (..., n) joint angles. Returns (points, frames) where points is
    (..., n+1, 3) joint/EE positions and frames is (..., n, 3, 3) the world
    rotation after each joint (used for axes and the EE orientation).
    """
    q = np.asarray(q, dtype=float)
    n = arm.n_joints
    if q.shape[-1] != n:
        raise DimensionMismatch(f"expected {n} joint angles, got {q.shape[-1]}")
    batch = q.shape[:-1]
    R = np.broadcast_to(arm.base.rotation, batch + (3, 3)).copy()
    p = np.broadcast_to(arm.base.translation, batch + (3,)).copy()
    points = np.empty(batch + (n + 1, 3))
    frames = np.empty(batch + (n, 3, 3))
    points[..., 0, :] = p
    for i in range(n):
        R = R @ rot_exp(q[..., i, None] * arm.axes[i])
        frames[..., i, :, :] = R
        p = p + arm.lengths[i] * R[..., :, 0]
        points[..., i + 1, :] = p
    return points, frames


def fk_arm(arm: ArmSpec, q: np.ndarray) -> Pose:
    """End-effector pose of one arm."""
    points, frames = fk_chain(arm, np.asarray(q, dtype=float))
    return Pose(frames[-1], points[-1])


def forward_kinematics(e: Embodiment, q: JointConfig) -> tuple[Pose, Pose]:
    """World-frame end-effector poses (left, right)."""
    validate_config(e, q)
    return fk_arm(e.left, q.left), fk_arm(e.right, q.right)


def jacobian_batch(arm: ArmSpec, q: np.ndarray) -> np.ndarray:
    """Batched geometric Jacobian (..., 6, n): linear rows 0:3, angular rows 3:6."""
    q = np.asarray(q, dtype=float)
    points, frames = fk_chain(arm, q)
    n = arm.n_joints
    p_ee = points[..., -1, :]
    J = np.empty(q.shape[:-1] + (6, n))
    for i in range(n):
        z = frames[..., i, :, :] @ arm.axes[i]
        r = p_ee - points[..., i, :]
        J[..., 0:3, i] = np.cross(z, r)
        J[..., 3:6, i] = z
    return J


def jacobian(e: Embodiment, arm: str, q: JointConfig) -> np.ndarray:
    """Geometric Jacobian of one end-effector, columns ordered by joint index."""
    validate_config(e, q)
    return jacobian_batch(e.arm(arm), q.arm(arm))


PLANAR_TASK_ROWS = (0, 1, 5)  # x, y, yaw


def task_jacobian(e: Embodiment, arm: str, q: np.ndarray) -> np.ndarray:
    """Task-subspace Jacobian: (x, y, yaw) rows for planar embodiments, full 6D otherwise."""
    J = jacobian_batch(e.arm(arm), np.asarray(q, dtype=float))
    if e.planar:
        return J[..., PLANAR_TASK_ROWS, :]
    return J


def dexterity(J: np.ndarray) -> float:
    """Manipulability sqrt(det(J J^T)); zero at singularities, never negative."""
    J = np.asarray(J, dtype=float)
    g = J @ np.swapaxes(J, -1, -2)
    det = np.linalg.det(g)
    return float(np.sqrt(max(det, 0.0))) if np.ndim(det) == 0 else np.sqrt(np.maximum(det, 0.0))


def planar_targets(poses_xyyaw: np.ndarray) -> np.ndarray:
    return np.asarray(poses_xyyaw, dtype=float).reshape(-1, 3)


def _wrap_angle(a: np.ndarray) -> np.ndarray:
    return (a + np.pi) % (2.0 * np.pi) - np.pi


def ik_planar(
    arm: ArmSpec,
    targets: np.ndarray,
    q0: np.ndarray,
    *,
    max_iters: int = 200,
    pos_tol: float = 1e-4,
    rot_tol: float = 1e-3,
    damping: float = 0.05,
    step_clip: float = 0.5,
) -> tuple[np.ndarray, np.ndarray]:
    """Batched damped-least-squares IK to planar (x, y, yaw) targets.

    targets: (B, 3); q0: (B, n) warm starts. Returns (q, converged mask).
    Joint limits are enforced by clamping each step.
    """
    targets = np.asarray(targets, dtype=float).reshape(-1, 3)
    q = np.array(q0, dtype=float).reshape(targets.shape[0], arm.n_joints)
    active = np.ones(targets.shape[0], dtype=bool)
    lam2 = damping * damping
    for _ in range(max_iters):
        if not np.any(active):
            break
        qa = q[active]
        points, frames = fk_chain(arm, qa)
        p = points[:, -1, :2]
        yaw = np.arctan2(frames[:, -1, 1, 0], frames[:, -1, 0, 0])
        err = np.empty((qa.shape[0], 3))
        err[:, :2] = targets[active, :2] - p
        err[:, 2] = _wrap_angle(targets[active, 2] - yaw)
        done = (np.linalg.norm(err[:, :2], axis=1) < pos_tol) & (np.abs(err[:, 2]) < rot_tol)
        J = jacobian_batch(arm, qa)[:, PLANAR_TASK_ROWS, :]
        JJt = J @ np.swapaxes(J, 1, 2)
        JJt[:, range(3), range(3)] += lam2
        y = np.linalg.solve(JJt, err[..., None])
        dq = (np.swapaxes(J, 1, 2) @ y)[..., 0]
        norms = np.linalg.norm(dq, axis=1, keepdims=True)
        dq = np.where(norms > step_clip, dq * (step_clip / np.maximum(norms, 1e-12)), dq)
        qa = np.clip(qa + dq, arm.limits[:, 0], arm.limits[:, 1])
        q[active] = qa
        idx = np.flatnonzero(active)
        active[idx[done]] = False
    # Final convergence assessment for everything (including late finishers).
    points, frames = fk_chain(arm, q)
    p = points[:, -1, :2]
    yaw = np.arctan2(frames[:, -1, 1, 0], frames[:, -1, 0, 0])
    ok = (np.linalg.norm(targets[:, :2] - p, axis=1) < pos_tol) & \
         (np.abs(_wrap_angle(targets[:, 2] - yaw)) < rot_tol)
    return q, ok


def pose_to_planar_target(p: Pose) -> np.ndarray:
    x, y, yaw = p.planar()
    return np.array([x, y, yaw])


def fd_jacobian(e: Embodiment, arm: str, q: JointConfig, h: float = 1e-6) -> np.ndarray:
    """Central finite-difference Jacobian; the independent oracle for tests."""
    spec = e.arm(arm)
    q_arm = q.arm(arm).copy()
    J = np.zeros((6, spec.n_joints))
    base_pose = fk_arm(spec, q_arm)
    for i in range(spec.n_joints):
        qp, qm = q_arm.copy(), q_arm.copy()
        qp[i] += h
        qm[i] -= h
        pp, pm = fk_arm(spec, qp), fk_arm(spec, qm)
        J[0:3, i] = (pp.translation - pm.translation) / (2 * h)
        dR = (pp.rotation - pm.rotation) / (2 * h)
        W = dR @ base_pose.rotation.T
        J[3:6, i] = [W[2, 1], W[0, 2], W[1, 0]]
    return J
