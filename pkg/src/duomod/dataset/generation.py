"""Self-supervised motion dataset generation.

Pipeline per start pair: sample goal poses on a golden-angle pattern around
each arm's start pose, verify reachability against the dexterity map, solve
IK, interpolate joint-space quintics, drop colliding motions, and store the
survivors as start-relative twist records with synthesized gripper profiles.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DimensionMismatch, YieldTooLow
from ..geometry import Embodiment, JointConfig, Pose, fk_chain, ik_planar
from ..geometry.capsules import segment_distance
from ..geometry.kinematics import SIDES
from ..motion import BimanualMotion, N_WAYPOINTS, to_relative
from ..rng import stream
from .dexterity_map import DexterityMap, build_dexterity_map, check_reachability, select_initial_poses
from .storage import MotionDataset

GOLDEN_ANGLE = np.pi * (3.0 - np.sqrt(5.0))


@dataclass
class GenConfig:
    """Dataset generation knobs."""

    goals_per_seed: int = 64
    radius: float = 0.18                    # goal sampling radius, meters
    orientation_perturbation: float = np.pi / 6
    target_size: int = 50_000
    seed: int = 0
    n_waypoints: int = N_WAYPOINTS
    voxel_size: float = 0.03
    orient_samples: int = 8
    min_yield: float = 0.05

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        if not (0.0 <= self.orientation_perturbation < np.pi):
            raise ValueError("orientation perturbation must lie in [0, pi)")


def fibonacci_sphere(n: int) -> np.ndarray:
    """n quasi-uniform unit vectors; n=1 is the +z pole."""
    if n == 1:
        return np.array([[0.0, 0.0, 1.0]])
    i = np.arange(n, dtype=float)
    z = 1.0 - 2.0 * i / (n - 1)
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    phi = i * GOLDEN_ANGLE
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)


def fibonacci_circle(n: int) -> np.ndarray:
    """n golden-angle-spaced unit vectors in the plane; n=1 points along +x."""
    phi = np.arange(n, dtype=float) * GOLDEN_ANGLE
    return np.stack([np.cos(phi), np.sin(phi)], axis=1)


def fibonacci_goals(center: Pose, cfg: GenConfig, planar: bool = True,
                    rng: np.random.Generator | None = None) -> list[Pose]:
    """Goal poses on the sampling pattern around center with perturbed orientations."""
    rng = rng if rng is not None else stream(cfg.seed, "fib-goals")
    n = cfg.goals_per_seed
    out = []
    if planar:
        dirs = fibonacci_circle(n)
        offsets = np.concatenate([dirs * cfg.radius, np.zeros((n, 1))], axis=1)
    else:
        offsets = fibonacci_sphere(n) * cfg.radius
    cx, cy, cyaw = center.planar()
    for i in range(n):
        pos = center.translation + offsets[i]
        dyaw = rng.uniform(-cfg.orientation_perturbation, cfg.orientation_perturbation) \
            if cfg.orientation_perturbation > 0 else 0.0
        out.append(Pose.from_planar(pos[0], pos[1], cyaw + dyaw))
    return out


def quintic_profile(n: int) -> np.ndarray:
    """Minimum-jerk time scaling 10s^3 - 15s^4 + 6s^5 on n samples of [0, 1]."""
    s = np.linspace(0.0, 1.0, n)
    return 10.0 * s**3 - 15.0 * s**4 + 6.0 * s**5


def quintic_interpolation(q0: JointConfig, q1: JointConfig, N: int
                          ) -> tuple[np.ndarray, np.ndarray]:
    """Joint trajectories (N, n_left), (N, n_right) with zero boundary vel/acc."""
    if N < 2:
        raise DimensionMismatch("need at least 2 waypoints")
    if q0.left.shape != q1.left.shape or q0.right.shape != q1.right.shape:
        raise DimensionMismatch("joint configurations must share dimensions")
    s = quintic_profile(N)[:, None]
    return (q0.left + s * (q1.left - q0.left),
            q0.right + s * (q1.right - q0.right))


def _self_pairs(n_links: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(n_links) for j in range(i + 2, n_links)]


def trajectory_collision_mask(left_traj: np.ndarray, right_traj: np.ndarray,
                              e: Embodiment) -> np.ndarray:
    """Per-waypoint collision flags for batched joint trajectories.

    left_traj: (..., n_left), right_traj: (..., n_right); returns (...,) bool,
    True where any capsule pair intersects.
    """
    pts = {"left": fk_chain(e.left, left_traj)[0],
           "right": fk_chain(e.right, right_traj)[0]}
    radii = {s: e.arm(s).capsule_radii for s in SIDES}
    hit = np.zeros(left_traj.shape[:-1], dtype=bool)
    for i in range(e.left.n_joints):
        for j in range(e.right.n_joints):
            d = segment_distance(pts["left"][..., i, :], pts["left"][..., i + 1, :],
                                 pts["right"][..., j, :], pts["right"][..., j + 1, :])
            hit |= d < radii["left"][i] + radii["right"][j]
    for side in SIDES:
        for i, j in _self_pairs(e.arm(side).n_joints):
            d = segment_distance(pts[side][..., i, :], pts[side][..., i + 1, :],
                                 pts[side][..., j, :], pts[side][..., j + 1, :])
            hit |= d < radii[side][i] + radii[side][j]
    return hit


def collision_check(traj: tuple[np.ndarray, np.ndarray], e: Embodiment) -> bool:
    """True iff the joint trajectory is collision-free at every waypoint."""
    left, right = traj
    if left.shape[-1] != e.left.n_joints or right.shape[-1] != e.right.n_joints:
        raise DimensionMismatch("trajectory dimensions do not match embodiment")
    return not bool(np.any(trajectory_collision_mask(left, right, e)))


def synth_gripper(n: int, rng: np.random.Generator) -> np.ndarray:
    """Smooth synthetic gripper profile: constant, or one logistic transition."""
    kind = rng.integers(3)
    if kind == 0:
        return np.zeros(n)
    if kind == 1:
        return np.ones(n)
    center = rng.uniform(0.25, 0.75) * (n - 1)
    width = rng.uniform(1.5, 3.0)
    ramp = 1.0 / (1.0 + np.exp(-(np.arange(n) - center) / width))
    return ramp if rng.random() < 0.5 else 1.0 - ramp


def _ee_yaw(frames: np.ndarray) -> np.ndarray:
    return np.arctan2(frames[..., -1, 1, 0], frames[..., -1, 0, 0])


def _relative_records(e: Embodiment, ee: dict, traj_l: np.ndarray, traj_r: np.ndarray
                      ) -> np.ndarray:
    """Batched start-relative twist records (R, N, 14) for joint trajectories."""
    from ..geometry import transform_log

    out = {}
    for side, traj in (("left", traj_l), ("right", traj_r)):
        pts, frames = fk_chain(e.arm(side), traj)
        inv = ee[side].inverse()
        R = np.einsum("ij,rnjk->rnik", inv.rotation, frames[..., -1, :, :])
        p = np.einsum("ij,rnj->rni", inv.rotation, pts[..., -1, :]) + inv.translation
        w, v = transform_log(R, p)
        out[side] = np.concatenate([w, v, np.zeros(w.shape[:-1] + (1,))], axis=-1)
    return np.concatenate([out["left"], out["right"]], axis=-1)


def generate_dataset(e: Embodiment, cfg: GenConfig,
                     dmap: DexterityMap | None = None) -> MotionDataset:
    """Run the full pipeline until target_size motions are stored.

    Raises YieldTooLow when the acceptance ratio drops under cfg.min_yield.
    """
    if dmap is None:
        dmap = build_dexterity_map(e, cfg.voxel_size, cfg.orient_samples, seed=cfg.seed)
    n_seeds = max(4, int(np.ceil(cfg.target_size / max(cfg.goals_per_seed, 1) * 1.5)))
    starts = select_initial_poses(dmap, e, k=min(n_seeds, 512), strict=False)
    rejects = {"unreachable": 0, "ik_failed": 0, "collision": 0}
    attempted = 0
    records = []
    N = cfg.n_waypoints

    for seed_idx in range(10**9):
        if len(records) >= cfg.target_size:
            break
        start = starts[seed_idx % len(starts)]
        rng = stream(cfg.seed, "gen", seed_idx)
        q_start: JointConfig = start["config"]
        # True start EE poses come from FK of the start configuration.
        ee = {}
        for side in SIDES:
            pts, frames = fk_chain(e.arm(side), q_start.arm(side))
            ee[side] = Pose(frames[-1], pts[-1])
        goals = {side: fibonacci_goals(ee[side], cfg, planar=True, rng=rng)
                 for side in SIDES}
        G = cfg.goals_per_seed
        attempted += G
        reachable = np.ones(G, dtype=bool)
        for side in SIDES:
            for i, g in enumerate(goals[side]):
                if not check_reachability(dmap, g, side=side):
                    reachable[i] = False
        rejects["unreachable"] += int(G - reachable.sum())
        idx = np.flatnonzero(reachable)
        if idx.size == 0:
            if attempted >= 4 * cfg.goals_per_seed and \
                    len(records) < cfg.min_yield * attempted:
                raise YieldTooLow(
                    f"accepted {len(records)}/{attempted}; rejects: {rejects}")
            continue
        qg = {}
        ok_all = np.ones(idx.size, dtype=bool)
        for side in SIDES:
            targets = np.array([[*goals[side][i].planar()] for i in idx])
            q0 = np.tile(q_start.arm(side), (idx.size, 1))
            q, ok = ik_planar(e.arm(side), targets, q0)
            retry = np.flatnonzero(~ok)
            if retry.size:
                # Second chance: warm start from the map's stored solution at
                # the goal voxel (may pick a different IK branch).
                ix, iy, inside = dmap.voxel_index(targets[retry, :2])
                k_near = np.argmin(np.abs(
                    (dmap.yaws[None, :] - targets[retry, 2:3] + np.pi)
                    % (2 * np.pi) - np.pi), axis=1)
                q0r = np.where(inside[:, None],
                               dmap.ik_solutions[side][np.clip(ix, 0, dmap.shape[0] - 1),
                                                       np.clip(iy, 0, dmap.shape[1] - 1),
                                                       k_near],
                               q0[retry])
                q2, ok2 = ik_planar(e.arm(side), targets[retry], q0r)
                q[retry] = np.where(ok2[:, None], q2, q[retry])
                ok[retry] |= ok2
            qg[side] = q
            ok_all &= ok
        rejects["ik_failed"] += int(idx.size - ok_all.sum())
        idx = idx[ok_all]
        if idx.size == 0:
            continue
        q_goal_l = qg["left"][ok_all]
        q_goal_r = qg["right"][ok_all]
        s = quintic_profile(N)[None, :, None]
        traj_l = q_start.left + s * (q_goal_l[:, None, :] - q_start.left)
        traj_r = q_start.right + s * (q_goal_r[:, None, :] - q_start.right)
        collide = trajectory_collision_mask(traj_l, traj_r, e).any(axis=1)
        rejects["collision"] += int(collide.sum())
        keep = np.flatnonzero(~collide)[:cfg.target_size - len(records)]
        if keep.size:
            batch = _relative_records(e, ee, traj_l[keep], traj_r[keep])
            for row in range(keep.size):
                batch[row, :, 6] = synth_gripper(N, rng)
                batch[row, :, 13] = synth_gripper(N, rng)
            records.extend(batch)
        if attempted >= 4 * cfg.goals_per_seed and len(records) < cfg.min_yield * attempted:
            raise YieldTooLow(f"accepted {len(records)}/{attempted}; rejects: {rejects}")

    report = {"attempted": attempted, "accepted": len(records), "rejects": rejects,
              "seeds_used": min(seed_idx + 1, len(starts)), "config_seed": cfg.seed}
    return MotionDataset(
        embodiment_hash=e.content_hash(),
        n_waypoints=N,
        records=np.asarray(records),
        relative=True,
        meta={"generation": report},
    )
