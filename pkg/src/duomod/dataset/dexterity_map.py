"""Dexterity maps: voxelized workspace scored by manipulability.

The dual-arm workspace is discretized into a planar voxel grid; at each voxel
a fan of end-effector yaw candidates is probed with damped-least-squares IK
and scored by sqrt(det(J J^T)) on the (x, y, yaw) task subspace. The map
stores, per arm, the score and IK solution for every (voxel, orientation)
candidate, so reachability queries are O(1) grid lookups.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import GridTooLarge, InsufficientReachableVoxels
from ..geometry import Embodiment, JointConfig, Pose, fk_chain, ik_planar, jacobian_batch
from ..geometry.kinematics import PLANAR_TASK_ROWS, SIDES
from ..geometry.capsules import segment_distance
from ..rng import stream

MAX_VOXELS = 1_000_000


@dataclass
class DexterityMap:
    """Per-arm manipulability scores over a planar voxel grid."""

    embodiment_hash: str
    origin: np.ndarray          # (2,) lower corner, meters
    voxel_size: float
    shape: tuple[int, int]      # (nx, ny)
    yaws: np.ndarray            # (K,) probed end-effector yaw candidates
    omega: dict[str, np.ndarray]      # side -> (nx, ny, K) scores, 0 = unreachable
    ik_solutions: dict[str, np.ndarray]  # side -> (nx, ny, K, n_joints)
    build_report: dict = field(default_factory=dict)

    @property
    def n_voxels(self) -> int:
        return self.shape[0] * self.shape[1]

    def best_omega(self, side: str) -> np.ndarray:
        """(nx, ny) best score over orientation candidates."""
        return self.omega[side].max(axis=2)

    def voxel_index(self, xy: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Grid indices plus validity mask for points (..., 2)."""
        xy = np.asarray(xy, dtype=float)
        rel = (xy - self.origin) / self.voxel_size
        ix = np.floor(rel[..., 0]).astype(int)
        iy = np.floor(rel[..., 1]).astype(int)
        ok = (ix >= 0) & (ix < self.shape[0]) & (iy >= 0) & (iy < self.shape[1])
        return ix, iy, ok

    def voxel_center(self, ix: np.ndarray, iy: np.ndarray) -> np.ndarray:
        return self.origin + (np.stack([ix, iy], axis=-1) + 0.5) * self.voxel_size


def default_grid_bounds(e: Embodiment, margin: float = 0.02) -> tuple[np.ndarray, np.ndarray]:
    lows, highs = [], []
    for side in SIDES:
        arm = e.arm(side)
        c = arm.base.translation[:2]
        r = arm.reach + margin
        lows.append(c - r)
        highs.append(c + r)
    return np.min(lows, axis=0), np.max(highs, axis=0)


def build_dexterity_map(e: Embodiment, voxel_size: float, orient_samples: int,
                        bounds: tuple | None = None, seed: int = 0) -> DexterityMap:
    """Probe the workspace grid with IK and record manipulability per candidate."""
    if voxel_size <= 0:
        raise GridTooLarge("voxel size must be positive")
    low, high = bounds if bounds is not None else default_grid_bounds(e)
    low = np.asarray(low, dtype=float)
    high = np.asarray(high, dtype=float)
    nx = max(int(np.ceil((high[0] - low[0]) / voxel_size)), 1)
    ny = max(int(np.ceil((high[1] - low[1]) / voxel_size)), 1)
    if nx * ny > MAX_VOXELS:
        raise GridTooLarge(f"{nx}x{ny} voxels exceed the {MAX_VOXELS} guard")
    K = int(orient_samples)
    yaws = np.linspace(-np.pi, np.pi, K, endpoint=False)

    ix, iy = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
    centers = low + (np.stack([ix, iy], axis=-1).reshape(-1, 2) + 0.5) * voxel_size
    report = {"voxels": nx * ny, "orient_samples": K, "ik_attempts": 0,
              "ik_converged": 0, "prefiltered": 0}
    omega: dict[str, np.ndarray] = {}
    solutions: dict[str, np.ndarray] = {}
    rng = stream(seed, "dexmap-restarts")

    for side in SIDES:
        arm = e.arm(side)
        om = np.zeros((nx * ny, K))
        sol = np.zeros((nx * ny, K, arm.n_joints))
        dist = np.linalg.norm(centers - arm.base.translation[:2], axis=1)
        r_min = max(0.0, 2.0 * arm.lengths.max() - arm.reach)
        candidates = np.flatnonzero((dist <= arm.reach) & (dist >= r_min))
        report["prefiltered"] += nx * ny - candidates.size
        if candidates.size == 0:
            omega[side] = om.reshape(nx, ny, K)
            solutions[side] = sol.reshape(nx, ny, K, arm.n_joints)
            continue
        targets = np.concatenate(
            [np.repeat(centers[candidates], K, axis=0),
             np.tile(yaws, candidates.size)[:, None]], axis=1)
        best_found = np.zeros(targets.shape[0], dtype=bool)
        q_found = np.zeros((targets.shape[0], arm.n_joints))
        for restart in range(3):
            todo = np.flatnonzero(~best_found)
            if todo.size == 0:
                break
            mid = (arm.limits[:, 0] + arm.limits[:, 1]) / 2.0
            span = (arm.limits[:, 1] - arm.limits[:, 0]) / 2.0
            q0 = mid + rng.uniform(-0.8, 0.8, size=(todo.size, arm.n_joints)) * span \
                if restart > 0 else np.tile(mid + 0.3, (todo.size, 1))
            q, ok = ik_planar(arm, targets[todo], q0)
            report["ik_attempts"] += todo.size
            hit = todo[ok]
            q_found[hit] = q[ok]
            best_found[hit] = True
        report["ik_converged"] += int(best_found.sum())
        if np.any(best_found):
            J = jacobian_batch(arm, q_found[best_found])[:, PLANAR_TASK_ROWS, :]
            g = J @ np.swapaxes(J, 1, 2)
            w = np.sqrt(np.maximum(np.linalg.det(g), 0.0))
            flat = np.zeros(targets.shape[0])
            flat[best_found] = w
            qs = np.zeros((targets.shape[0], arm.n_joints))
            qs[best_found] = q_found[best_found]
            om_c = flat.reshape(candidates.size, K)
            q_c = qs.reshape(candidates.size, K, arm.n_joints)
            om[candidates] = om_c
            sol[candidates] = q_c
        omega[side] = om.reshape(nx, ny, K)
        solutions[side] = sol.reshape(nx, ny, K, arm.n_joints)

    return DexterityMap(
        embodiment_hash=e.content_hash(), origin=low, voxel_size=float(voxel_size),
        shape=(nx, ny), yaws=yaws, omega=omega, ik_solutions=solutions,
        build_report=report)


def check_reachability(dmap: DexterityMap, p: Pose, side: str | None = None,
                       yaw_tol: float | None = None) -> bool:
    """True iff the enclosing voxel has a scoring orientation candidate near p's yaw."""
    x, y, yaw = p.planar()
    ix, iy, ok = dmap.voxel_index(np.array([x, y]))
    if not bool(ok):
        return False
    if yaw_tol is None:
        step = 2.0 * np.pi / max(len(dmap.yaws), 1)
        yaw_tol = 0.75 * step
    dyaw = np.abs((dmap.yaws - yaw + np.pi) % (2.0 * np.pi) - np.pi)
    near = dyaw <= yaw_tol
    sides = [side] if side is not None else list(SIDES)
    return any(bool(np.any(dmap.omega[s][int(ix), int(iy), near] > 0.0)) for s in sides)


def _start_config_collision_free(e: Embodiment, q: JointConfig, margin: float = 0.0) -> bool:
    points = {side: fk_chain(e.arm(side), q.arm(side))[0] for side in SIDES}
    for i in range(e.left.n_joints):
        for j in range(e.right.n_joints):
            d = segment_distance(points["left"][i], points["left"][i + 1],
                                 points["right"][j], points["right"][j + 1])
            if d < e.left.capsule_radii[i] + e.right.capsule_radii[j] + margin:
                return False
    return True


def select_initial_poses(dmap: DexterityMap, e: Embodiment, k: int,
                         top_per_arm: int = 60, min_separation: float = 0.10,
                         max_separation: float = 0.55, strict: bool = True
                         ) -> list[dict]:
    """Top-k collision-free dual start candidates ranked by min(left, right) score.

    Each entry carries the EE poses, IK joint configuration, and the pair score.
    Separation bounds keep the pair inside the shared workspace. With
    strict=False, returns however many valid pairs exist (at least one).
    """
    best = {side: dmap.best_omega(side) for side in SIDES}
    picks = {}
    for side in SIDES:
        flat = best[side].ravel()
        order = np.argsort(flat)[::-1][:top_per_arm]
        order = order[flat[order] > 0.0]
        picks[side] = order
    if min(picks[s].size for s in SIDES) == 0:
        raise InsufficientReachableVoxels("no reachable voxels for at least one arm")

    pairs = []
    for a in picks["left"]:
        for b in picks["right"]:
            score = min(best["left"].ravel()[a], best["right"].ravel()[b])
            pairs.append((score, int(a), int(b)))
    pairs.sort(key=lambda p: (-p[0], p[1], p[2]))

    nx, ny = dmap.shape
    out: list[dict] = []
    for score, a, b in pairs:
        axi, ayi = divmod(a, ny)
        bxi, byi = divmod(b, ny)
        ca = dmap.voxel_center(np.array(axi), np.array(ayi))
        cb = dmap.voxel_center(np.array(bxi), np.array(byi))
        sep = np.linalg.norm(ca - cb)
        if sep < min_separation or sep > max_separation:
            continue
        ka = int(np.argmax(dmap.omega["left"][axi, ayi]))
        kb = int(np.argmax(dmap.omega["right"][bxi, byi]))
        q = JointConfig(dmap.ik_solutions["left"][axi, ayi, ka],
                        dmap.ik_solutions["right"][bxi, byi, kb])
        if not _start_config_collision_free(e, q):
            continue
        left_pose = Pose.from_planar(ca[0], ca[1], float(dmap.yaws[ka]))
        right_pose = Pose.from_planar(cb[0], cb[1], float(dmap.yaws[kb]))
        out.append({"score": float(score), "left_pose": left_pose,
                    "right_pose": right_pose, "config": q})
        if len(out) == k:
            return out
    if strict or not out:
        raise InsufficientReachableVoxels(
            f"only {len(out)} valid start pairs available, requested {k}")
    return out
