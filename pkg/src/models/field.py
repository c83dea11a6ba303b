"""Dense voxel radiance field: the reconstruction unknown."""

import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np
from scipy.special import expit

from config import CHECKPOINT_MAGIC, COLOR_INIT, DENSITY_INIT, FIELD_BBOX_MAX, FIELD_BBOX_MIN, FIELD_RESOLUTION
from ..errors import ArgumentError, InvalidStateError

OUTSIDE_RGB = np.array([0.5, 0.5, 0.5])

# Corner offsets in (x, y, z) order matching the trilinear weight product.
_CORNERS = np.array([[i, j, k] for i in (0, 1) for j in (0, 1) for k in (0, 1)], dtype=np.int64)


def softplus(x: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, x)


def softplus_inverse(y: np.ndarray) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64)
    return y + np.log(-np.expm1(-y))


def logit(p: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    return np.log(p) - np.log1p(-p)


@dataclass(eq=False)
class VoxelField:
    """Density and color parameter grids over an axis-aligned box.

    Values are interpolated trilinearly in parameter space and activated
    afterwards (softplus for density, sigmoid for color).
    """

    resolution: tuple[int, int, int]
    bbox_min: np.ndarray
    bbox_max: np.ndarray
    density_param: np.ndarray
    color_param: np.ndarray
    density_grad: np.ndarray = field(init=False)
    color_grad: np.ndarray = field(init=False)
    version: int = field(default=0, init=False)

    def __post_init__(self) -> None:
        self.resolution = tuple(int(n) for n in self.resolution)
        if len(self.resolution) != 3 or min(self.resolution) < 2:
            raise ArgumentError(f"Resolution must be three integers >= 2, got {self.resolution}")
        self.bbox_min = np.asarray(self.bbox_min, dtype=np.float64).reshape(3)
        self.bbox_max = np.asarray(self.bbox_max, dtype=np.float64).reshape(3)
        if np.any(self.bbox_max <= self.bbox_min):
            raise ArgumentError("Bounding box must have positive extent")
        self.density_param = np.asarray(self.density_param, dtype=np.float64).reshape(self.resolution)
        self.color_param = np.asarray(self.color_param, dtype=np.float64).reshape(*self.resolution, 3)
        self.density_grad = np.zeros_like(self.density_param)
        self.color_grad = np.zeros_like(self.color_param)

    @classmethod
    def create(
        cls,
        resolution: Union[int, tuple[int, int, int]] = FIELD_RESOLUTION,
        bbox_min: tuple[float, float, float] = FIELD_BBOX_MIN,
        bbox_max: tuple[float, float, float] = FIELD_BBOX_MAX,
        density_init: float = DENSITY_INIT,
        color_init: float = COLOR_INIT,
    ) -> "VoxelField":
        if isinstance(resolution, int):
            resolution = (resolution, resolution, resolution)
        return cls(
            resolution=resolution,
            bbox_min=bbox_min,
            bbox_max=bbox_max,
            density_param=np.full(resolution, density_init),
            color_param=np.full((*resolution, 3), color_init),
        )

    @property
    def n_voxels(self) -> int:
        nx, ny, nz = self.resolution
        return nx * ny * nz

    def _corners(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Flat corner indices (N, 8), trilinear weights (N, 8) and inside mask (N,)."""
        points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        unit = (points - self.bbox_min) / (self.bbox_max - self.bbox_min)
        inside = np.all((unit >= 0.0) & (unit <= 1.0), axis=1)
        res = np.asarray(self.resolution)
        grid = np.clip(unit, 0.0, 1.0) * (res - 1)
        base = np.clip(np.floor(grid).astype(np.int64), 0, res - 2)
        frac = grid - base

        corner = base[:, None, :] + _CORNERS[None, :, :]
        flat = (corner[..., 0] * res[1] + corner[..., 1]) * res[2] + corner[..., 2]
        w = np.where(_CORNERS[None, :, :] == 1, frac[:, None, :], 1.0 - frac[:, None, :])
        weights = np.prod(w, axis=2)
        weights[~inside] = 0.0
        return flat, weights, inside

    def _interpolate_raw(self, flat: np.ndarray, weights: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        density = np.sum(self.density_param.reshape(-1)[flat] * weights, axis=1)
        color = np.einsum("nk,nkc->nc", weights, self.color_param.reshape(-1, 3)[flat])
        return density, color

    def query_points(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Batched query: densities (N,) and colors (N, 3)."""
        flat, weights, inside = self._corners(points)
        raw_density, raw_color = self._interpolate_raw(flat, weights)
        density = np.where(inside, softplus(raw_density), 0.0)
        rgb = np.where(inside[:, None], expit(raw_color), OUTSIDE_RGB)
        return density, rgb

    def query(self, point: np.ndarray) -> tuple[float, np.ndarray]:
        density, rgb = self.query_points(np.asarray(point).reshape(1, 3))
        return float(density[0]), rgb[0]

    def query_points_backward(self, points: np.ndarray, d_density: np.ndarray, d_rgb: np.ndarray) -> None:
        """Accumulate upstream gradients of a batched query into the grad buffers."""
        flat, weights, inside = self._corners(points)
        if not np.any(inside):
            return
        d_density = np.asarray(d_density, dtype=np.float64).reshape(-1)
        d_rgb = np.asarray(d_rgb, dtype=np.float64).reshape(-1, 3)
        raw_density, raw_color = self._interpolate_raw(flat, weights)

        sig = expit(raw_color)
        g_density = d_density * expit(raw_density)
        g_color = d_rgb * sig * (1.0 - sig)

        idx = flat.reshape(-1)
        self.density_grad.reshape(-1)[:] += np.bincount(
            idx, weights=(weights * g_density[:, None]).reshape(-1), minlength=self.n_voxels
        )
        color_grad = self.color_grad.reshape(-1, 3)
        for c in range(3):
            color_grad[:, c] += np.bincount(
                idx, weights=(weights * g_color[:, c, None]).reshape(-1), minlength=self.n_voxels
            )

    def query_backward(self, point: np.ndarray, d_density: float, d_rgb: np.ndarray) -> None:
        self.query_points_backward(np.asarray(point).reshape(1, 3), np.array([d_density]), np.reshape(d_rgb, (1, 3)))

    def zero_grad(self) -> None:
        self.density_grad.fill(0.0)
        self.color_grad.fill(0.0)

    def mark_updated(self) -> None:
        """Record a parameter update; render records taken before it become stale."""
        self.version += 1

    def copy(self) -> "VoxelField":
        clone = VoxelField(
            resolution=self.resolution,
            bbox_min=self.bbox_min.copy(),
            bbox_max=self.bbox_max.copy(),
            density_param=self.density_param.copy(),
            color_param=self.color_param.copy(),
        )
        clone.version = self.version
        return clone


_HEADER = struct.Struct("<5s3I6d")


def save_checkpoint(voxel_field: VoxelField, path: Union[str, Path]) -> Path:
    """Write the field as a VOXF1 binary file (little-endian, x-fastest)."""
    path = Path(path)
    header = _HEADER.pack(CHECKPOINT_MAGIC, *voxel_field.resolution, *voxel_field.bbox_min, *voxel_field.bbox_max)
    density = voxel_field.density_param.ravel(order="F").astype("<f4")
    color = np.transpose(voxel_field.color_param, (2, 1, 0, 3)).reshape(-1, 3).astype("<f4")
    path.write_bytes(header + density.tobytes() + color.tobytes())
    return path


def load_checkpoint(path: Union[str, Path]) -> VoxelField:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise InvalidStateError(f"Checkpoint {path} is truncated")
    magic, nx, ny, nz, *bbox = _HEADER.unpack_from(raw)
    if magic != CHECKPOINT_MAGIC:
        raise InvalidStateError(f"Checkpoint {path} has bad magic {magic!r}")
    n = nx * ny * nz
    expected = _HEADER.size + 4 * n * 4
    if len(raw) != expected:
        raise InvalidStateError(f"Checkpoint {path} has {len(raw)} bytes, expected {expected}")
    body = np.frombuffer(raw, dtype="<f4", offset=_HEADER.size).astype(np.float64)
    density = body[:n].reshape((nx, ny, nz), order="F")
    color = np.transpose(body[n:].reshape(nz, ny, nx, 3), (2, 1, 0, 3))
    return VoxelField(
        resolution=(nx, ny, nz),
        bbox_min=bbox[:3],
        bbox_max=bbox[3:],
        density_param=density,
        color_param=color,
    )
