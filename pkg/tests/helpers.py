"""Small builders shared by the test modules."""

from typing import Optional, Sequence

import numpy as np

from src.geometry.cameras import look_at_rotation
from src.models.camera import CameraPose


def look_at_pose(
    position: Sequence[float],
    target: Sequence[float] = (0.0, 0.0, 0.0),
    up: Sequence[float] = (0.0, -1.0, 0.0),
    size: int = 32,
    focal: Optional[float] = None,
) -> CameraPose:
    position = np.asarray(position, dtype=np.float64)
    return CameraPose(
        rotation=look_at_rotation(position, np.asarray(target, dtype=np.float64), np.asarray(up, dtype=np.float64)),
        position=position,
        focal_px=focal if focal is not None else 1.2 * size,
        principal_point=(size / 2, size / 2),
        image_size=(size, size),
    )


def ring_poses(
    n: int,
    radius: float = 3.0,
    height: float = 0.0,
    target: Sequence[float] = (0.0, 0.0, 0.0),
    size: int = 32,
) -> list[CameraPose]:
    """n cameras evenly spaced on a horizontal circle, all aimed at ``target``."""
    center = np.asarray(target, dtype=np.float64)
    poses = []
    for angle in np.linspace(0.0, 2.0 * np.pi, n, endpoint=False):
        offset = np.array([radius * np.cos(angle), height, radius * np.sin(angle)])
        poses.append(look_at_pose(center + offset, center, size=size))
    return poses


def identity_pose(focal: float = 1.0, principal=(0.0, 0.0), size=(2, 2), position=(0.0, 0.0, 0.0)) -> CameraPose:
    return CameraPose(
        rotation=np.eye(3), position=np.asarray(position, dtype=np.float64), focal_px=focal,
        principal_point=principal, image_size=size,
    )


def rigid_transform(pose: CameraPose, rotation: np.ndarray, translation: np.ndarray) -> CameraPose:
    return CameraPose(
        rotation=rotation @ pose.rotation,
        position=rotation @ pose.position + translation,
        focal_px=pose.focal_px,
        principal_point=pose.principal_point,
        image_size=pose.image_size,
    )
