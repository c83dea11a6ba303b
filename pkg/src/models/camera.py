"""Camera, ray and posed-image data models."""

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from config import ROTATION_TOLERANCE
from ..errors import ArgumentError


@dataclass(frozen=True, eq=False)
class CameraPose:
    """Camera-to-world rigid transform plus pinhole intrinsics.

    Camera frame: +x right, +y down, +z forward.
    """

    rotation: np.ndarray
    position: np.ndarray
    focal_px: float
    principal_point: np.ndarray
    image_size: tuple[int, int]

    def __post_init__(self) -> None:
        rotation = np.asarray(self.rotation, dtype=np.float64).reshape(3, 3)
        position = np.asarray(self.position, dtype=np.float64).reshape(3)
        principal = np.asarray(self.principal_point, dtype=np.float64).reshape(2)
        width, height = (int(v) for v in self.image_size)
        object.__setattr__(self, "rotation", rotation)
        object.__setattr__(self, "position", position)
        object.__setattr__(self, "principal_point", principal)
        object.__setattr__(self, "image_size", (width, height))
        object.__setattr__(self, "focal_px", float(self.focal_px))

        if width <= 0 or height <= 0:
            raise ArgumentError(f"Image size must be positive, got {self.image_size}")
        if not self.focal_px > 0:
            raise ArgumentError(f"Focal length must be positive, got {self.focal_px}")
        if np.max(np.abs(rotation.T @ rotation - np.eye(3))) > ROTATION_TOLERANCE:
            raise ArgumentError("Rotation is not orthonormal")
        if np.linalg.det(rotation) < 0:
            raise ArgumentError("Rotation has determinant -1")
        if not (0.0 <= principal[0] <= width and 0.0 <= principal[1] <= height):
            raise ArgumentError(f"Principal point {principal.tolist()} lies outside the image")

    @property
    def width(self) -> int:
        return self.image_size[0]

    @property
    def height(self) -> int:
        return self.image_size[1]

    @property
    def forward(self) -> np.ndarray:
        """Optical axis in world coordinates."""
        return self.rotation[:, 2]

    @property
    def up(self) -> np.ndarray:
        return -self.rotation[:, 1]

    def resized(self, width: int, height: int) -> "CameraPose":
        """Same camera with intrinsics rescaled to a new image size."""
        sx = width / self.width
        sy = height / self.height
        if not np.isclose(sx, sy):
            raise ArgumentError(f"Resize must keep the aspect ratio, got {sx} vs {sy}")
        return CameraPose(
            rotation=self.rotation,
            position=self.position,
            focal_px=self.focal_px * sx,
            principal_point=self.principal_point * np.array([sx, sy]),
            image_size=(width, height),
        )

    def with_position(self, position: np.ndarray) -> "CameraPose":
        return CameraPose(
            rotation=self.rotation,
            position=position,
            focal_px=self.focal_px,
            principal_point=self.principal_point,
            image_size=self.image_size,
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "rotation": [float(v) for v in self.rotation.reshape(-1)],
            "position": [float(v) for v in self.position],
            "focal_px": self.focal_px,
            "principal_point": [float(v) for v in self.principal_point],
            "image_size": list(self.image_size),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "CameraPose":
        try:
            return cls(
                rotation=np.asarray(data["rotation"], dtype=np.float64).reshape(3, 3),
                position=data["position"],
                focal_px=data["focal_px"],
                principal_point=data["principal_point"],
                image_size=tuple(data["image_size"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ArgumentError(f"Malformed pose record: {exc}") from exc


@dataclass(frozen=True, eq=False)
class Ray:
    origin: np.ndarray
    direction: np.ndarray

    def point_at(self, distance: float) -> np.ndarray:
        return self.origin + distance * self.direction


@dataclass(eq=False)
class PosedImage:
    """An H x W x 3 image in [0, 1] together with the camera that took it."""

    image: np.ndarray
    pose: CameraPose
    name: str = field(default="")

    def __post_init__(self) -> None:
        self.image = np.asarray(self.image, dtype=np.float64)
        expected = (self.pose.height, self.pose.width, 3)
        if self.image.shape != expected:
            raise ArgumentError(f"Image shape {self.image.shape} does not match pose {expected}")
