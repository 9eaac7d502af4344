"""Dataset generation: dexterity maps, goal sampling, interpolation, storage."""

from .dexterity_map import (
    DexterityMap,
    build_dexterity_map,
    check_reachability,
    select_initial_poses,
    default_grid_bounds,
)
from .generation import (
    GenConfig,
    collision_check,
    fibonacci_circle,
    fibonacci_goals,
    fibonacci_sphere,
    generate_dataset,
    quintic_interpolation,
    quintic_profile,
    synth_gripper,
    trajectory_collision_mask,
)
from .storage import MotionDataset, load_dataset, save_dataset

__all__ = [
    "DexterityMap", "build_dexterity_map", "check_reachability",
    "select_initial_poses", "default_grid_bounds",
    "GenConfig", "collision_check", "fibonacci_circle", "fibonacci_goals",
    "fibonacci_sphere", "generate_dataset", "quintic_interpolation",
    "quintic_profile", "synth_gripper", "trajectory_collision_mask",
    "MotionDataset", "load_dataset", "save_dataset",
]
