import numpy as np
import pytest
from scipy.optimize import least_squares

from duomod.errors import AngleAtPi
from duomod.geometry import (
    Pose,
    Twist,
    nearest_rotation,
    rot_exp,
    rot_log,
    se3_compose,
    se3_exp,
    se3_inverse,
    se3_log,
    transform_exp,
    transform_log,
)
from duomod.rng import stream


def random_poses(n, rng, max_angle=np.pi - 1e-2):
    w = rng.normal(size=(n, 3))
    norms = np.linalg.norm(w, axis=1, keepdims=True)
    w = w / np.maximum(norms, 1e-12) * rng.uniform(0, max_angle, size=(n, 1))
    v = rng.normal(size=(n, 3))
    R, t = transform_exp(w, v)
    return R, t, w, v


def test_log_of_identity_is_zero_twist():
    tw = se3_log(Pose.identity())
    assert np.allclose(tw.as_vector(), 0.0, atol=1e-15)


def test_log_of_pure_translation():
    p = Pose(np.eye(3), [1.0, 2.0, 3.0])
    tw = se3_log(p)
    assert np.allclose(tw.rotational, 0.0, atol=1e-15)
    assert np.allclose(tw.translational, [1.0, 2.0, 3.0], atol=1e-15)


def test_log_matches_root_finder_oracle_on_z_quarter_turn():
    # Invert the exponential numerically, then compare against se3_log.
    target = Pose.from_planar(1.0, 0.0, np.pi / 2)

    def residual(v6):
        R, t = transform_exp(v6[:3], v6[3:])
        return np.concatenate([(R - target.rotation).ravel(), t - target.translation])

    sol = least_squares(residual, x0=np.zeros(6), xtol=1e-15, ftol=1e-15, gtol=1e-15)
    assert sol.cost < 1e-20
    tw = se3_log(target)
    assert np.allclose(tw.as_vector(), sol.x, atol=1e-8)


def test_exp_of_zero_twist_is_identity():
    p = se3_exp(Twist(np.zeros(3), np.zeros(3)))
    assert p.allclose(Pose.identity(), tol=1e-15)


def test_exp_quarter_turn_closed_form_vs_series():
    v = Twist([0.0, 0.0, np.pi / 2], [0.0, 0.0, 0.0])
    p = se3_exp(v)
    expected = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
    assert np.allclose(p.rotation, expected, atol=1e-12)
    # Independent oracle: truncated matrix-exponential power series of hat(w).
    from duomod.geometry import hat

    W = hat(np.array([0.0, 0.0, np.pi / 2]))
    series = np.eye(3)
    term = np.eye(3)
    for k in range(1, 30):
        term = term @ W / k
        series = series + term
    assert np.allclose(p.rotation, series, atol=1e-12)


def test_compose_with_inverse_is_identity():
    rng = stream(11, "se3-inv")
    R, t, _, _ = random_poses(50, rng)
    for i in range(50):
        a = Pose(R[i], t[i])
        assert se3_compose(a, se3_inverse(a)).allclose(Pose.identity(), tol=1e-12)


def test_group_axioms_randomized():
    rng = stream(7, "se3-axioms")
    n = 10_000
    Ra, ta, _, _ = random_poses(n, rng)
    Rb, tb, _, _ = random_poses(n, rng)
    Rc, tc, _, _ = random_poses(n, rng)
    # Associativity: (a b) c == a (b c)
    Rab, tab = Ra @ Rb, (Ra @ tb[..., None])[..., 0] + ta
    R1, t1 = Rab @ Rc, (Rab @ tc[..., None])[..., 0] + tab
    Rbc, tbc = Rb @ Rc, (Rb @ tc[..., None])[..., 0] + tb
    R2, t2 = Ra @ Rbc, (Ra @ tbc[..., None])[..., 0] + ta
    assert np.max(np.abs(R1 - R2)) < 1e-12
    assert np.max(np.abs(t1 - t2)) < 1e-12
    # Closure: products stay orthonormal with det +1.
    gram = R1 @ np.swapaxes(R1, -1, -2)
    assert np.max(np.abs(gram - np.eye(3))) < 1e-12
    assert np.max(np.abs(np.linalg.det(R1) - 1.0)) < 1e-12
    # Inverse composes to identity.
    Rinv = np.swapaxes(Ra, -1, -2)
    tinv = -(Rinv @ ta[..., None])[..., 0]
    Rid = Ra @ Rinv
    tid = (Ra @ tinv[..., None])[..., 0] + ta
    assert np.max(np.abs(Rid - np.eye(3))) < 1e-12
    assert np.max(np.abs(tid)) < 1e-12


def test_log_exp_roundtrip_below_pi():
    rng = stream(13, "se3-roundtrip")
    n = 10_000
    w = rng.normal(size=(n, 3))
    w = w / np.linalg.norm(w, axis=1, keepdims=True) * rng.uniform(0, np.pi - 1e-3, size=(n, 1))
    v = rng.normal(size=(n, 3)) * 2.0
    R, t = transform_exp(w, v)
    w2, v2 = transform_log(R, t)
    assert np.max(np.abs(w2 - w)) < 1e-9
    assert np.max(np.abs(v2 - v)) < 1e-9


def test_exp_log_roundtrip_pose_level():
    rng = stream(17, "se3-pose-roundtrip")
    for _ in range(200):
        w = rng.normal(size=3)
        w = w / np.linalg.norm(w) * rng.uniform(0, np.pi - 1e-3)
        tw = Twist(w, rng.normal(size=3))
        p = se3_exp(tw)
        assert se3_exp(se3_log(p)).allclose(p, tol=1e-9)


def test_log_raises_at_pi():
    R = rot_exp(np.array([np.pi, 0.0, 0.0]))
    with pytest.raises(AngleAtPi):
        se3_log(Pose(R, np.zeros(3)))


def test_log_near_pi_but_outside_guard():
    angle = np.pi - 5e-4
    w = np.array([0.0, angle, 0.0])
    R = rot_exp(w)
    w2 = rot_log(R)
    assert np.allclose(w2, w, atol=1e-9)


def test_nearest_rotation_projects_drift():
    rng = stream(19, "se3-renorm")
    R, _, _, _ = random_poses(1, rng)
    drifted = R[0] + rng.normal(size=(3, 3)) * 1e-6
    fixed = nearest_rotation(drifted)
    assert np.allclose(fixed @ fixed.T, np.eye(3), atol=1e-12)
    assert np.linalg.det(fixed) > 0
    assert np.linalg.norm(fixed - R[0]) < 1e-5


def test_renormalized_after_long_chain():
    rng = stream(23, "se3-chain")
    p = Pose.identity()
    step = se3_exp(Twist(rng.normal(size=3) * 0.01, rng.normal(size=3) * 0.01))
    for _ in range(5000):
        p = p.compose(step)
    p = p.renormalized()
    gram = p.rotation @ p.rotation.T
    assert np.allclose(gram, np.eye(3), atol=1e-9)
