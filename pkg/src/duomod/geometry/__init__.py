"""SE(3) math, dual-arm kinematics, and the dexterity metric."""

from .se3 import (
    Pose,
    Twist,
    se3_exp,
    se3_log,
    se3_compose,
    se3_inverse,
    rot_exp,
    rot_log,
    rot_angle,
    transform_exp,
    transform_log,
    nearest_rotation,
    hat,
    vee,
)
from .kinematics import (
    ArmSpec,
    Embodiment,
    JointConfig,
    LEFT,
    RIGHT,
    SIDES,
    forward_kinematics,
    fk_arm,
    fk_chain,
    jacobian,
    jacobian_batch,
    task_jacobian,
    dexterity,
    ik_planar,
    validate_config,
    fd_jacobian,
)
from .capsules import segment_distance, point_segment_distance
from .embodiment_io import load_embodiment, dump_embodiment

__all__ = [
    "Pose", "Twist", "se3_exp", "se3_log", "se3_compose", "se3_inverse",
    "rot_exp", "rot_log", "rot_angle", "transform_exp", "transform_log",
    "nearest_rotation", "hat", "vee",
    "ArmSpec", "Embodiment", "JointConfig", "LEFT", "RIGHT", "SIDES",
    "forward_kinematics", "fk_arm", "fk_chain", "jacobian", "jacobian_batch",
    "task_jacobian", "dexterity", "ik_planar", "validate_config", "fd_jacobian",
    "segment_distance", "point_segment_distance",
    "load_embodiment", "dump_embodiment",
]
