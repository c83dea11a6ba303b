"""Pinhole camera operations: rays, projection, focus point, rescaling."""

from typing import Literal, Sequence

import numpy as np

from config import FIXED_PRESCALE_FACTOR, FOCUS_CONDITION_LIMIT
from ..errors import ArgumentError, BehindCameraError, BoundsError, DegenerateGeometryError, InsufficientDataError
from ..models.camera import CameraPose, Ray


def _camera_directions(pose: CameraPose, pixels: np.ndarray) -> np.ndarray:
    cx, cy = pose.principal_point
    local = np.stack(
        [(pixels[:, 0] - cx) / pose.focal_px, (pixels[:, 1] - cy) / pose.focal_px, np.ones(len(pixels))],
        axis=1,
    )
    world = local @ pose.rotation.T
    return world / np.linalg.norm(world, axis=1, keepdims=True)


def ray_for_pixel(pose: CameraPose, pixel: Sequence[float]) -> Ray:
    u, v = (float(c) for c in pixel)
    if not (0.0 <= u <= pose.width and 0.0 <= v <= pose.height):
        raise BoundsError(f"Pixel ({u}, {v}) outside image of size {pose.image_size}")
    direction = _camera_directions(pose, np.array([[u, v]]))[0]
    return Ray(origin=pose.position.copy(), direction=direction)


def pixel_centers(width: int, height: int) -> np.ndarray:
    """Pixel-centre coordinates (H*W, 2) in row-major order."""
    us, vs = np.meshgrid(np.arange(width) + 0.5, np.arange(height) + 0.5)
    return np.stack([us.reshape(-1), vs.reshape(-1)], axis=1)


def rays_for_image(pose: CameraPose) -> tuple[np.ndarray, np.ndarray]:
    """Origins and unit directions (H*W, 3) through every pixel centre."""
    directions = _camera_directions(pose, pixel_centers(pose.width, pose.height))
    origins = np.broadcast_to(pose.position, directions.shape).copy()
    return origins, directions


def project_points(pose: CameraPose, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Batched projection without raising: pixels (N, 2) and camera-frame depth (N,).

    Points with depth <= 1e-9 get NaN pixels.
    """
    local = (np.asarray(points, dtype=np.float64).reshape(-1, 3) - pose.position) @ pose.rotation
    depth = local[:, 2]
    in_front = depth > 1e-9
    safe = np.where(in_front, depth, 1.0)
    pixels = pose.focal_px * local[:, :2] / safe[:, None] + pose.principal_point
    pixels[~in_front] = np.nan
    return pixels, depth


def project(pose: CameraPose, point: Sequence[float]) -> tuple[np.ndarray, float]:
    pixels, depth = project_points(pose, np.asarray(point, dtype=np.float64).reshape(1, 3))
    if not depth[0] > 1e-9:
        raise BehindCameraError(f"Point {list(point)} is behind the camera (depth {depth[0]:.3g})")
    return pixels[0], float(depth[0])


def look_at_rotation(position: np.ndarray, target: np.ndarray, up: np.ndarray) -> np.ndarray:
    """Camera-to-world rotation looking from position toward target."""
    forward = np.asarray(target, dtype=np.float64) - np.asarray(position, dtype=np.float64)
    norm = np.linalg.norm(forward)
    if norm < 1e-9:
        raise DegenerateGeometryError("Camera position coincides with its look-at point")
    forward = forward / norm
    right = np.cross(forward, up)
    right_norm = np.linalg.norm(right)
    if right_norm < 1e-9:
        raise DegenerateGeometryError("Up vector is parallel to the viewing direction")
    right = right / right_norm
    true_up = np.cross(right, forward)
    return np.stack([right, -true_up, forward], axis=1)


def focus_point(poses: Sequence[CameraPose]) -> np.ndarray:
    """Least-squares point closest to every camera's optical axis."""
    if len(poses) < 2:
        raise InsufficientDataError(f"Focus point needs at least 2 poses, got {len(poses)}")
    a = np.zeros((3, 3))
    b = np.zeros(3)
    for pose in poses:
        d = pose.forward / np.linalg.norm(pose.forward)
        m = np.eye(3) - np.outer(d, d)
        a += m
        b += m @ pose.position
    if np.linalg.cond(a) >= FOCUS_CONDITION_LIMIT:
        raise DegenerateGeometryError("Camera axes are (nearly) parallel; focus point is undefined")
    return np.linalg.solve(a, b)


def scale_positions(poses: Sequence[CameraPose], factor: float) -> list[CameraPose]:
    """Multiply camera positions by a constant, rotations unchanged."""
    if not factor > 0:
        raise ArgumentError(f"Scale factor must be positive, got {factor}")
    return [pose.with_position(pose.position * factor) for pose in poses]


def rescale_scene(
    poses: Sequence[CameraPose],
    mode: Literal["focus", "fixed"] = "focus",
    factor: float = FIXED_PRESCALE_FACTOR,
) -> tuple[list[CameraPose], float, np.ndarray]:
    """Move the focus point to the origin and fit positions inside [-1, 1]^3.

    Returns the new poses, the scale and the translation such that
    new_position = (position + translation) * scale.
    In "fixed" mode positions are only multiplied by ``factor``.
    """
    if mode == "fixed":
        return scale_positions(poses, factor), float(factor), np.zeros(3)
    if mode != "focus":
        raise ArgumentError(f"Unknown rescale mode '{mode}'")

    translation = -focus_point(poses)
    shifted = np.stack([pose.position for pose in poses]) + translation
    extent = float(np.max(np.abs(shifted)))
    if extent < 1e-12:
        raise DegenerateGeometryError("All cameras coincide with the focus point")
    scale = 1.0 / extent
    rescaled = [pose.with_position(p * scale) for pose, p in zip(poses, shifted)]
    return rescaled, scale, translation
