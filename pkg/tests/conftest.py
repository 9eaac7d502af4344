import numpy as np
import pytest

from duomod.geometry import ArmSpec, Embodiment, Pose


def make_planar_arm(base_xy, base_yaw, lengths, radius=0.02, limits=(-2.9, 2.9)):
    n = len(lengths)
    return ArmSpec(
        base=Pose.from_planar(base_xy[0], base_xy[1], base_yaw),
        axes=np.tile([0.0, 0.0, 1.0], (n, 1)),
        lengths=np.asarray(lengths, dtype=float),
        limits=np.tile(limits, (n, 1)),
        capsule_radii=np.full(n, radius),
    )


@pytest.fixture(scope="session")
def dual_arm():
    """The workbench's default planar dual-arm platform."""
    return Embodiment(
        name="planar-dual-3link",
        left=make_planar_arm((-0.22, 0.0), np.pi / 2, (0.30, 0.25, 0.15)),
        right=make_planar_arm((0.22, 0.0), np.pi / 2, (0.30, 0.25, 0.15)),
    )


@pytest.fixture(scope="session")
def single_arm_at_origin():
    return make_planar_arm((0.0, 0.0), 0.0, (0.30, 0.25, 0.15))
