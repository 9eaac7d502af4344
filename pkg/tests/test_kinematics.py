import numpy as np
import pytest

from duomod.errors import DimensionMismatch
from duomod.geometry import (
    Embodiment,
    JointConfig,
    Pose,
    dexterity,
    fd_jacobian,
    fk_arm,
    forward_kinematics,
    ik_planar,
    jacobian,
    rot_exp,
    task_jacobian,
    validate_config,
)
from duomod.rng import stream

from conftest import make_planar_arm


def chain_multiplication_oracle(arm, q):
    """Naive per-link homogeneous-transform chain; independent of fk_chain."""
    T = arm.base.matrix()
    for i in range(arm.n_joints):
        rot = np.eye(4)
        rot[:3, :3] = rot_exp(q[i] * arm.axes[i])
        trans = np.eye(4)
        trans[0, 3] = arm.lengths[i]
        T = T @ rot @ trans
    return T


def test_straight_chain_sums_lengths(single_arm_at_origin):
    pose = fk_arm(single_arm_at_origin, np.zeros(3))
    assert np.allclose(pose.translation, [0.70, 0.0, 0.0], atol=1e-15)
    assert np.allclose(pose.rotation, np.eye(3), atol=1e-15)


def test_single_joint_quarter_turn():
    arm = make_planar_arm((0.0, 0.0), 0.0, (0.5,))
    pose = fk_arm(arm, [np.pi / 2])
    assert np.allclose(pose.translation, [0.0, 0.5, 0.0], atol=1e-12)


def test_fk_matches_chain_oracle(dual_arm):
    rng = stream(31, "fk-oracle")
    for _ in range(50):
        q = JointConfig(rng.uniform(-2.5, 2.5, 3), rng.uniform(-2.5, 2.5, 3))
        left, right = forward_kinematics(dual_arm, q)
        Tl = chain_multiplication_oracle(dual_arm.left, q.left)
        Tr = chain_multiplication_oracle(dual_arm.right, q.right)
        assert np.abs(left.matrix() - Tl).max() < 1e-12
        assert np.abs(right.matrix() - Tr).max() < 1e-12


def test_fk_rejects_wrong_dimension(dual_arm):
    with pytest.raises(DimensionMismatch):
        forward_kinematics(dual_arm, JointConfig([0.0, 0.0], [0.0, 0.0, 0.0]))


def test_validate_checks_limits(dual_arm):
    q = JointConfig([3.5, 0.0, 0.0], [0.0, 0.0, 0.0])
    validate_config(dual_arm, q)  # dims fine
    with pytest.raises(DimensionMismatch):
        validate_config(dual_arm, q, check_limits=True)


def test_jacobian_matches_finite_differences(dual_arm):
    rng = stream(37, "jac-fd")
    worst = 0.0
    for _ in range(1000):
        q = JointConfig(rng.uniform(-2.5, 2.5, 3), rng.uniform(-2.5, 2.5, 3))
        side = "left" if rng.random() < 0.5 else "right"
        J = jacobian(dual_arm, side, q)
        J_fd = fd_jacobian(dual_arm, side, q, h=1e-6)
        scale = max(np.abs(J_fd).max(), 1.0)
        worst = max(worst, np.abs(J - J_fd).max() / scale)
    assert worst < 1e-5


def test_straight_chain_lever_arms(single_arm_at_origin):
    l1, l2, l3 = single_arm_at_origin.lengths
    J = jacobian(
        Embodiment(name="one", left=single_arm_at_origin, right=single_arm_at_origin),
        "left",
        JointConfig(np.zeros(3), np.zeros(3)),
    )
    # Perpendicular (y) translational row carries the lever arms.
    assert np.allclose(J[1], [l1 + l2 + l3, l2 + l3, l3], atol=1e-12)
    assert np.allclose(J[0], 0.0, atol=1e-12)


def test_zero_length_links_give_zero_translational_jacobian():
    with pytest.raises(DimensionMismatch):
        make_planar_arm((0.0, 0.0), 0.0, (0.0, 0.0))
    # Degenerate-by-construction: joints stacked at one point via tiny links.
    arm = make_planar_arm((0.0, 0.0), 0.0, (1e-300, 1e-300))
    emb = Embodiment(name="degen", left=arm, right=arm)
    J = jacobian(emb, "left", JointConfig([0.3, -0.2], [0.0, 0.0]))
    assert np.abs(J[0:3]).max() < 1e-12


def test_dexterity_planar_closed_form():
    l1, l2 = 0.30, 0.25
    arm = make_planar_arm((0.0, 0.0), 0.0, (l1, l2))
    emb = Embodiment(name="two-link", left=arm, right=arm)
    rng = stream(41, "dex")
    for _ in range(50):
        q2 = rng.uniform(-2.5, 2.5)
        q = JointConfig([rng.uniform(-2.5, 2.5), q2], [0.0, 0.0])
        J = jacobian(emb, "left", q)[0:2]  # position-only 2x2
        assert abs(dexterity(J) - abs(l1 * l2 * np.sin(q2))) < 1e-12


def test_dexterity_zero_at_singularity():
    arm = make_planar_arm((0.0, 0.0), 0.0, (0.30, 0.25))
    emb = Embodiment(name="two-link", left=arm, right=arm)
    J = jacobian(emb, "left", JointConfig([0.7, 0.0], [0.0, 0.0]))[0:2]
    assert dexterity(J) < 1e-6


def test_dexterity_elbow_right_angle_value():
    arm = make_planar_arm((0.0, 0.0), 0.0, (0.30, 0.25))
    emb = Embodiment(name="two-link", left=arm, right=arm)
    J = jacobian(emb, "left", JointConfig([0.3, np.pi / 2], [0.0, 0.0]))[0:2]
    assert abs(dexterity(J) - 0.075) < 1e-9


def test_dexterity_invariant_under_base_rigid_transform():
    rng = stream(43, "dex-invariance")
    lengths = (0.30, 0.25, 0.15)
    q = rng.uniform(-2.0, 2.0, 3)
    base_variants = [(0.0, 0.0, 0.0), (0.4, -0.3, 1.1), (-1.0, 2.0, -2.5)]
    values = []
    for bx, by, byaw in base_variants:
        arm = make_planar_arm((bx, by), byaw, lengths)
        emb = Embodiment(name="v", left=arm, right=arm)
        J = task_jacobian(emb, "left", q)
        values.append(dexterity(J))
    assert np.allclose(values, values[0], atol=1e-12)


def test_ik_planar_converges_and_respects_targets(dual_arm):
    rng = stream(47, "ik")
    arm = dual_arm.left
    q_true = rng.uniform(-2.0, 2.0, size=(64, 3))
    from duomod.geometry import fk_chain

    points, frames = fk_chain(arm, q_true)
    targets = np.stack(
        [points[:, -1, 0], points[:, -1, 1],
         np.arctan2(frames[:, -1, 1, 0], frames[:, -1, 0, 0])], axis=1)
    q0 = q_true + rng.normal(scale=0.3, size=q_true.shape)
    q, ok = ik_planar(arm, targets, np.clip(q0, arm.limits[:, 0], arm.limits[:, 1]))
    assert ok.mean() > 0.9
    sol_points, sol_frames = fk_chain(arm, q[ok])
    err = np.linalg.norm(sol_points[:, -1, :2] - targets[ok, :2], axis=1)
    assert err.max() < 1e-4
