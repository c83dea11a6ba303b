"""Procedural primitive scenes with analytic ground-truth rendering."""

import logging
from typing import Literal, Optional, Sequence

import numpy as np

from config import AMBIENT, HELDOUT_STRIDE, SCENE_EXTENT, SCENE_MAX_REJECTIONS
from ..errors import ArgumentError, CapacityError
from ..geometry.cameras import rays_for_image
from ..geometry.posedist import pose_from_path
from ..models.camera import CameraPose, PosedImage
from ..models.field import VoxelField, logit
from ..models.paths import EllipseParams, Intrinsics, PosePath
from ..models.parameters import SceneSpec
from ..models.scene import Box, Primitive, Sphere, SyntheticScene

logger = logging.getLogger(__name__)


def make_scene(n_primitives: int, seed: int, extent: float = SCENE_EXTENT) -> SyntheticScene:
    """Seeded, pairwise disjoint spheres and boxes inside [-extent, extent]^3."""
    if n_primitives < 1:
        raise ArgumentError(f"Scene needs at least one primitive, got {n_primitives}")
    rng = np.random.default_rng(seed)
    primitives: list[Primitive] = []
    rejections = 0
    while len(primitives) < n_primitives:
        albedo = rng.uniform(0.2, 1.0, size=3)
        if rng.uniform() < 0.5:
            radius = rng.uniform(0.15, 0.35)
            center = rng.uniform(-extent + radius, extent - radius, size=3)
            candidate: Primitive = Sphere(center, radius, albedo)
        else:
            half = rng.uniform(0.1, 0.3, size=3)
            center = rng.uniform(-extent + half, extent - half)
            candidate = Box(center - half, center + half, albedo)

        if all(_disjoint(candidate, other) for other in primitives):
            primitives.append(candidate)
            continue
        rejections += 1
        if rejections >= SCENE_MAX_REJECTIONS:
            raise CapacityError(f"Could not place {n_primitives} primitives after {rejections} rejections")
    logger.debug("Placed %d primitives after %d rejections", n_primitives, rejections)
    return SyntheticScene(primitives=tuple(primitives))


def _disjoint(a: Primitive, b: Primitive) -> bool:
    return np.linalg.norm(a.centroid - b.centroid) > a.bounding_radius + b.bounding_radius


def signed_distance(primitive: Primitive, points: np.ndarray) -> np.ndarray:
    if isinstance(primitive, Sphere):
        return np.linalg.norm(points - primitive.center, axis=-1) - primitive.radius
    center = primitive.centroid
    half = (primitive.max - primitive.min) / 2
    q = np.abs(points - center) - half
    outside = np.linalg.norm(np.maximum(q, 0.0), axis=-1)
    inside = np.minimum(np.max(q, axis=-1), 0.0)
    return outside + inside


def surface_normal(primitive: Primitive, points: np.ndarray) -> np.ndarray:
    """Outward normal of the primitive's nearest face, defined everywhere."""
    if isinstance(primitive, Sphere):
        offset = points - primitive.center
        norm = np.maximum(np.linalg.norm(offset, axis=-1, keepdims=True), 1e-12)
        return offset / norm
    half = (primitive.max - primitive.min) / 2
    local = (points - primitive.centroid) / half
    axis = np.argmax(np.abs(local), axis=-1)
    normal = np.zeros_like(points)
    picked = np.take_along_axis(local, axis[..., None], axis=-1)[..., 0]
    np.put_along_axis(normal, axis[..., None], np.sign(picked)[..., None], axis=-1)
    return normal


def shade(scene: SyntheticScene, albedo: np.ndarray, normals: np.ndarray) -> np.ndarray:
    """Lambertian term with one directional light plus ambient."""
    diffuse = np.maximum(normals @ scene.light_direction, 0.0)
    return albedo * np.minimum(AMBIENT + diffuse, 1.0)[..., None]


def _intersect(primitive: Primitive, origins: np.ndarray, directions: np.ndarray) -> np.ndarray:
    """Distance to the first hit along each ray, inf on a miss."""
    if isinstance(primitive, Sphere):
        offset = origins - primitive.center
        b = np.sum(offset * directions, axis=1)
        c = np.sum(offset * offset, axis=1) - primitive.radius**2
        disc = b * b - c
        root = np.sqrt(np.maximum(disc, 0.0))
        near, far = -b - root, -b + root
        t = np.where(near > 0, near, far)
        return np.where((disc >= 0) & (t > 0), t, np.inf)

    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / directions
        t1 = (primitive.min - origins) * inv
        t2 = (primitive.max - origins) * inv
    t_lo = np.nanmax(np.minimum(t1, t2), axis=1)
    t_hi = np.nanmin(np.maximum(t1, t2), axis=1)
    t = np.where(t_lo > 0, t_lo, t_hi)
    return np.where((t_lo <= t_hi) & (t > 0), t, np.inf)


def trace(scene: SyntheticScene, origins: np.ndarray, directions: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """First-hit colors (R, 3) and hit mask (R,) for unit-direction rays."""
    hits = np.stack([_intersect(p, origins, directions) for p in scene.primitives], axis=1)
    nearest = np.argmin(hits, axis=1)
    distance = hits[np.arange(len(hits)), nearest]
    hit = np.isfinite(distance)

    colors = np.broadcast_to(scene.background, origins.shape).copy()
    points = origins + np.where(hit, distance, 0.0)[:, None] * directions
    for index, primitive in enumerate(scene.primitives):
        mask = hit & (nearest == index)
        if np.any(mask):
            colors[mask] = shade(scene, primitive.albedo, surface_normal(primitive, points[mask]))
    return colors, hit


def render_gt(scene: SyntheticScene, pose: CameraPose, resolution: Optional[int] = None) -> np.ndarray:
    """Ray-traced H x W x 3 image of the scene."""
    if resolution is not None and pose.image_size != (resolution, resolution):
        pose = pose.resized(resolution, resolution)
    origins, directions = rays_for_image(pose)
    colors, _ = trace(scene, origins, directions)
    return colors.reshape(pose.height, pose.width, 3)


def render_mask(scene: SyntheticScene, pose: CameraPose) -> np.ndarray:
    origins, directions = rays_for_image(pose)
    _, hit = trace(scene, origins, directions)
    return hit.reshape(pose.height, pose.width)


def dataset_path(spec: SceneSpec) -> PosePath:
    """Circular capture path above the scene, looking at the origin."""
    focal = 0.5 * spec.resolution / np.tan(np.radians(spec.fov_deg) / 2)
    return PosePath(
        kind="ellipse",
        intrinsics=Intrinsics(
            focal_px=float(focal),
            principal_point=(spec.resolution / 2, spec.resolution / 2),
            image_size=(spec.resolution, spec.resolution),
        ),
        ellipse=EllipseParams(
            center=np.array([0.0, -spec.elevation, 0.0]),
            axis_u=np.array([spec.radius, 0.0, 0.0]),
            axis_v=np.array([0.0, 0.0, spec.radius]),
            look_at=np.zeros(3),
            up=np.array([0.0, -1.0, 0.0]),
        ),
    )


def view_parameters(
    n_train: int,
    n_test: int,
    protocol: Literal["midpoint", "stride"] = "midpoint",
    n_frames: int = 48,
    stride: int = HELDOUT_STRIDE,
) -> tuple[np.ndarray, np.ndarray]:
    """Path parameters of the training and held-out views."""
    if n_train < 1:
        raise ArgumentError(f"Need at least one training view, got {n_train}")
    if protocol == "midpoint":
        if not 0 <= n_test <= n_train:
            raise ArgumentError(f"Midpoint protocol supports 0..{n_train} test views, got {n_test}")
        train = np.arange(n_train) / n_train
        midpoints = (np.arange(n_train) + 0.5) / n_train
        picks = np.unique(np.round(np.linspace(0, n_train - 1, n_test)).astype(int)) if n_test else []
        return train, midpoints[picks]
    if protocol == "stride":
        if n_frames < n_train:
            raise ArgumentError(f"Need at least {n_train} frames, got {n_frames}")
        frames = np.arange(n_frames) / n_frames
        train_idx = np.unique(np.round(np.linspace(0, n_frames - 1, n_train)).astype(int))
        remaining = np.setdiff1d(np.arange(n_frames), train_idx)
        test_idx = remaining[::stride]
        if n_test:
            test_idx = test_idx[:n_test]
        return frames[train_idx], frames[test_idx]
    raise ArgumentError(f"Unknown view protocol '{protocol}'")


def generate_views(
    scene: SyntheticScene,
    path: PosePath,
    n_train: int,
    n_test: int,
    resolution: Optional[int] = None,
    **protocol_kwargs,
) -> tuple[list[PosedImage], list[PosedImage]]:
    """Render training and held-out views along ``path``."""
    train_params, test_params = view_parameters(n_train, n_test, **protocol_kwargs)

    def views(params: Sequence[float], prefix: str) -> list[PosedImage]:
        out = []
        for i, u in enumerate(params):
            pose = pose_from_path(path, float(u))
            if resolution is not None and pose.image_size != (resolution, resolution):
                pose = pose.resized(resolution, resolution)
            out.append(PosedImage(image=render_gt(scene, pose), pose=pose, name=f"{prefix}_{i:03d}"))
        return out

    return views(train_params, "train"), views(test_params, "test")


def bake_scene(
    scene: SyntheticScene,
    resolution: int,
    bbox_min: Sequence[float] = (-1.0, -1.0, -1.0),
    bbox_max: Sequence[float] = (1.0, 1.0, 1.0),
    sharpness: float = 100.0,
) -> VoxelField:
    """Voxelize the scene: density from signed distance, color from the nearest primitive's shading."""
    bbox_min = np.asarray(bbox_min, dtype=np.float64)
    bbox_max = np.asarray(bbox_max, dtype=np.float64)
    axes = [np.linspace(lo, hi, resolution) for lo, hi in zip(bbox_min, bbox_max)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    voxel = float(np.max((bbox_max - bbox_min) / (resolution - 1)))

    distances = np.stack([signed_distance(p, grid) for p in scene.primitives], axis=0)
    nearest = np.argmin(distances, axis=0)
    sdf = np.min(distances, axis=0)

    color = np.zeros((*grid.shape[:3], 3))
    for index, primitive in enumerate(scene.primitives):
        mask = nearest == index
        color[mask] = shade(scene, primitive.albedo, surface_normal(primitive, grid[mask]))

    return VoxelField(
        resolution=(resolution, resolution, resolution),
        bbox_min=bbox_min,
        bbox_max=bbox_max,
        density_param=np.clip(-sdf / voxel * sharpness, -10.0, 300.0),
        color_param=logit(np.clip(color, 1e-4, 1.0 - 1e-4)),
    )
