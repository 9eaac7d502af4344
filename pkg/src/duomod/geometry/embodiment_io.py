"""Embodiment descriptor files.

A descriptor is a small YAML key-value tree:

    version: 1
    name: planar-dual-3link
    arms:
      left:
        base: {position: [x, y, z], rpy: [roll, pitch, yaw]}
        joints:
          - {axis: [0, 0, 1], length: 0.30, limits: [-2.9, 2.9]}
        capsule_radii: [0.02, ...]
      right: ...

Schema violations raise SchemaError carrying the path of the offending field.
"""

from __future__ import annotations

import io
from pathlib import Path

import numpy as np
import yaml

from ..errors import SchemaError
from .se3 import Pose, rot_exp
from .kinematics import ArmSpec, Embodiment, SIDES

SCHEMA_VERSION = 1


def _require(node: dict, key: str, path: str):
    if not isinstance(node, dict) or key not in node:
        raise SchemaError(f"missing field at {path}.{key}")
    return node[key]


def _numbers(value, count: int, path: str) -> np.ndarray:
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise SchemaError(f"non-numeric value at {path}") from None
    if arr.shape != (count,):
        raise SchemaError(f"expected {count} numbers at {path}, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise SchemaError(f"non-finite value at {path}")
    return arr


def _parse_base(node, path: str) -> Pose:
    pos = _numbers(_require(node, "position", path), 3, f"{path}.position")
    rpy = _numbers(_require(node, "rpy", path), 3, f"{path}.rpy")
    R = rot_exp(np.array([0.0, 0.0, rpy[2]])) @ rot_exp(np.array([0.0, rpy[1], 0.0])) \
        @ rot_exp(np.array([rpy[0], 0.0, 0.0]))
    return Pose(R, pos)


def _parse_arm(node, path: str) -> ArmSpec:
    base = _parse_base(_require(node, "base", path), f"{path}.base")
    joints = _require(node, "joints", path)
    if not isinstance(joints, list) or len(joints) < 1:
        raise SchemaError(f"expected a non-empty joint list at {path}.joints")
    axes, lengths, limits = [], [], []
    for i, joint in enumerate(joints):
        jp = f"{path}.joints[{i}]"
        axis = _numbers(_require(joint, "axis", jp), 3, f"{jp}.axis")
        norm = np.linalg.norm(axis)
        if norm < 1e-9:
            raise SchemaError(f"zero-length axis at {jp}.axis")
        axes.append(axis / norm)
        length = _require(joint, "length", jp)
        if not isinstance(length, (int, float)) or length <= 0:
            raise SchemaError(f"link length must be positive at {jp}.length")
        lengths.append(float(length))
        lim = _numbers(_require(joint, "limits", jp), 2, f"{jp}.limits")
        if lim[0] >= lim[1]:
            raise SchemaError(f"limits must be increasing at {jp}.limits")
        limits.append(lim)
    radii = _numbers(_require(node, "capsule_radii", path), len(joints), f"{path}.capsule_radii")
    if np.any(radii <= 0):
        raise SchemaError(f"capsule radii must be positive at {path}.capsule_radii")
    return ArmSpec(base=base, axes=np.array(axes), lengths=np.array(lengths),
                   limits=np.array(limits), capsule_radii=radii)


def load_embodiment(source: str | Path | io.TextIOBase) -> Embodiment:
    """Parse a descriptor file, path, or already-open stream."""
    if isinstance(source, (str, Path)) and "\n" not in str(source):
        text = Path(source).read_text()
    elif isinstance(source, str):
        text = source
    else:
        text = source.read()
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise SchemaError(f"not valid YAML: {exc}") from None
    if not isinstance(doc, dict):
        raise SchemaError("descriptor root must be a mapping")
    version = _require(doc, "version", "$")
    if version != SCHEMA_VERSION:
        raise SchemaError(f"unsupported descriptor version {version} at $.version")
    name = _require(doc, "name", "$")
    arms = _require(doc, "arms", "$")
    parsed = {}
    for side in SIDES:
        parsed[side] = _parse_arm(_require(arms, side, "$.arms"), f"$.arms.{side}")
    meta = {k: v for k, v in doc.items() if k not in ("version", "name", "arms")}
    return Embodiment(name=str(name), left=parsed["left"], right=parsed["right"], meta=meta)


def dump_embodiment(e: Embodiment) -> str:
    """Serialize back to descriptor text (round-trips through load_embodiment)."""
    def arm_doc(arm: ArmSpec) -> dict:
        x, y, yaw = arm.base.planar()
        # Recover rpy assuming zyx order; planar bases give (0, 0, yaw).
        rot = arm.base.rotation
        pitch = float(-np.arcsin(np.clip(rot[2, 0], -1.0, 1.0)))
        roll = float(np.arctan2(rot[2, 1], rot[2, 2]))
        yaw = float(np.arctan2(rot[1, 0], rot[0, 0]))
        return {
            "base": {"position": [float(v) for v in arm.base.translation],
                     "rpy": [roll, pitch, yaw]},
            "joints": [
                {"axis": [float(a) for a in arm.axes[i]],
                 "length": float(arm.lengths[i]),
                 "limits": [float(arm.limits[i, 0]), float(arm.limits[i, 1])]}
                for i in range(arm.n_joints)
            ],
            "capsule_radii": [float(r) for r in arm.capsule_radii],
        }

    doc = {
        "version": SCHEMA_VERSION,
        "name": e.name,
        "arms": {side: arm_doc(e.arm(side)) for side in SIDES},
    }
    doc.update(e.meta)
    return yaml.safe_dump(doc, sort_keys=False)
