"""Pose paths fitted to training cameras and the novel-view distribution drawn from them."""

import logging
from typing import Sequence

import numpy as np
from scipy.interpolate import BSpline
from scipy.spatial.transform import Rotation

from config import BSPLINE_DEGREE, ELLIPSE_AXIS_SCALE, PERTURB_MAX_RESAMPLES
from ..errors import ArgumentError, BoundsError, DegenerateGeometryError, InsufficientDataError
from ..models.camera import CameraPose, PosedImage
from ..models.paths import BSplineParams, EllipseParams, Intrinsics, PerturbSpec, PosePath
from .cameras import look_at_rotation

logger = logging.getLogger(__name__)


def _intrinsics_of(pose: CameraPose) -> Intrinsics:
    return Intrinsics(
        focal_px=pose.focal_px,
        principal_point=(float(pose.principal_point[0]), float(pose.principal_point[1])),
        image_size=pose.image_size,
    )


def _mean_up(poses: Sequence[CameraPose]) -> np.ndarray:
    up = np.mean([pose.up for pose in poses], axis=0)
    norm = np.linalg.norm(up)
    if norm < 1e-9:
        raise DegenerateGeometryError("Camera up vectors cancel out")
    return up / norm


def fit_ellipse_path(poses: Sequence[CameraPose], focus: np.ndarray) -> PosePath:
    """Fit an ellipse in the best-fit plane of the camera positions, facing ``focus``."""
    if len(poses) < 3:
        raise InsufficientDataError(f"Ellipse fit needs at least 3 poses, got {len(poses)}")
    positions = np.stack([pose.position for pose in poses])
    centroid = positions.mean(axis=0)
    centered = positions - centroid
    covariance = centered.T @ centered / len(poses)
    eigvals, eigvecs = np.linalg.eigh(covariance)
    if eigvals[2] <= 1e-18 or eigvals[1] <= 1e-9 * eigvals[2]:
        raise DegenerateGeometryError("Camera positions are collinear; no best-fit plane")

    axis_u = eigvecs[:, 2]
    axis_v = eigvecs[:, 1]
    # Sign convention: first camera on the positive side of axis_u, path runs through the second.
    if np.dot(centered[0], axis_u) < 0:
        axis_u = -axis_u
    normal = np.cross(axis_u, axis_v)
    if np.dot(np.cross(centered[0], centered[1]), normal) < 0:
        axis_v = -axis_v

    ellipse = EllipseParams(
        center=centroid,
        axis_u=axis_u * ELLIPSE_AXIS_SCALE * np.sqrt(eigvals[2]),
        axis_v=axis_v * ELLIPSE_AXIS_SCALE * np.sqrt(eigvals[1]),
        look_at=np.asarray(focus, dtype=np.float64).copy(),
        up=_mean_up(poses),
    )
    logger.debug("Fitted ellipse path centred at %s", np.round(centroid, 4).tolist())
    return PosePath(kind="ellipse", intrinsics=_intrinsics_of(poses[0]), ellipse=ellipse)


def clamped_knots(n_control: int, degree: int) -> np.ndarray:
    interior = np.linspace(0.0, 1.0, n_control - degree + 1)[1:-1]
    return np.concatenate([np.zeros(degree + 1), interior, np.ones(degree + 1)])


def fit_bspline_path(poses: Sequence[CameraPose], degree: int = BSPLINE_DEGREE) -> PosePath:
    """Clamped uniform B-spline through the capture order of the cameras."""
    if len(poses) < degree + 1:
        raise InsufficientDataError(f"Degree {degree} spline needs {degree + 1} poses, got {len(poses)}")
    spline = BSplineParams(
        control_points=np.stack([pose.position for pose in poses]),
        degree=degree,
        look_ats=np.stack([pose.position + pose.forward for pose in poses]),
        up=_mean_up(poses),
    )
    return PosePath(kind="bspline", intrinsics=_intrinsics_of(poses[0]), bspline=spline)


def path_point(path: PosePath, u: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Base (position, look_at, up) at path parameter u in [0, 1]."""
    if path.kind == "ellipse":
        e = path.ellipse
        angle = 2.0 * np.pi * u
        position = e.center + np.cos(angle) * e.axis_u + np.sin(angle) * e.axis_v
        return position, np.asarray(e.look_at, dtype=np.float64), np.asarray(e.up, dtype=np.float64)

    b = path.bspline
    knots = clamped_knots(len(b.control_points), b.degree)
    u = float(np.clip(u, 0.0, 1.0))
    position = BSpline(knots, b.control_points, b.degree)(u)
    look_at = BSpline(knots, b.look_ats, b.degree)(u)
    return position, look_at, np.asarray(b.up, dtype=np.float64)


def pose_from_path(path: PosePath, u: float) -> CameraPose:
    position, look_at, up = path_point(path, u)
    return _build_pose(path, position, look_at, up)


def _build_pose(path: PosePath, position: np.ndarray, look_at: np.ndarray, up: np.ndarray) -> CameraPose:
    intr = path.intrinsics
    return CameraPose(
        rotation=look_at_rotation(position, look_at, up),
        position=position,
        focal_px=intr.focal_px,
        principal_point=np.asarray(intr.principal_point),
        image_size=intr.image_size,
    )


def sample_in_ball(radius: float, rng: np.random.Generator) -> np.ndarray:
    """Uniform sample from the ball of the given radius (rejection from the cube)."""
    if radius == 0:
        return np.zeros(3)
    while True:
        candidate = rng.uniform(-1.0, 1.0, size=3)
        if np.dot(candidate, candidate) <= 1.0:
            return candidate * radius


def sample_novel_pose(path: PosePath, perturb: PerturbSpec, rng: np.random.Generator) -> CameraPose:
    """Pick a uniform path parameter and perturb position, look-at and up."""
    for _ in range(PERTURB_MAX_RESAMPLES):
        u = rng.uniform(0.0, 1.0)
        position, look_at, up = path_point(path, u)
        position = position + sample_in_ball(perturb.position_radius, rng)
        look_at = look_at + sample_in_ball(perturb.lookat_radius, rng)
        angle = rng.uniform(-perturb.up_angle_max, perturb.up_angle_max) if perturb.up_angle_max > 0 else 0.0

        forward = look_at - position
        distance = np.linalg.norm(forward)
        if distance < 1e-9:
            continue
        if angle != 0.0:
            up = Rotation.from_rotvec(angle * forward / distance).apply(up)
        try:
            return _build_pose(path, position, look_at, up)
        except DegenerateGeometryError:
            continue
    raise DegenerateGeometryError(f"No valid novel pose after {PERTURB_MAX_RESAMPLES} draws")


def nearest_views(target: CameraPose, observations: Sequence[PosedImage], k: int) -> list[int]:
    """Indices of the k observations whose cameras are closest to ``target``."""
    if not 1 <= k <= len(observations):
        raise BoundsError(f"k must be in [1, {len(observations)}], got {k}")
    distances = np.array([np.linalg.norm(obs.pose.position - target.position) for obs in observations])
    order = np.argsort(distances, kind="stable")
    return [int(i) for i in order[:k]]


def sample_poses(path: PosePath, perturb: PerturbSpec, n: int, seed: int) -> list[CameraPose]:
    if n < 0:
        raise ArgumentError(f"Pose count must be >= 0, got {n}")
    rng = np.random.default_rng(seed)
    return [sample_novel_pose(path, perturb, rng) for _ in range(n)]
