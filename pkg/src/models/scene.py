"""Analytic primitive scenes."""

from dataclasses import dataclass, field
from typing import Any, Union

import numpy as np

from config import LIGHT_DIRECTION
from ..errors import ArgumentError


def _albedo(values) -> np.ndarray:
    albedo = np.asarray(values, dtype=np.float64).reshape(3)
    if np.any(albedo < 0) or np.any(albedo > 1):
        raise ArgumentError(f"Albedo must lie in [0, 1], got {albedo.tolist()}")
    return albedo


@dataclass(frozen=True, eq=False)
class Sphere:
    center: np.ndarray
    radius: float
    albedo: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "center", np.asarray(self.center, dtype=np.float64).reshape(3))
        object.__setattr__(self, "albedo", _albedo(self.albedo))
        if not self.radius > 0:
            raise ArgumentError(f"Sphere radius must be positive, got {self.radius}")

    @property
    def lower(self) -> np.ndarray:
        return self.center - self.radius

    @property
    def upper(self) -> np.ndarray:
        return self.center + self.radius

    @property
    def bounding_radius(self) -> float:
        return float(self.radius)

    @property
    def centroid(self) -> np.ndarray:
        return self.center

    def transformed(self, translation: np.ndarray, scale: float) -> "Sphere":
        return Sphere((self.center + translation) * scale, self.radius * scale, self.albedo)

    def to_dict(self) -> dict[str, Any]:
        return {"type": "sphere", "center": self.center.tolist(), "radius": self.radius, "albedo": self.albedo.tolist()}


@dataclass(frozen=True, eq=False)
class Box:
    min: np.ndarray
    max: np.ndarray
    albedo: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "min", np.asarray(self.min, dtype=np.float64).reshape(3))
        object.__setattr__(self, "max", np.asarray(self.max, dtype=np.float64).reshape(3))
        object.__setattr__(self, "albedo", _albedo(self.albedo))
        if np.any(self.max <= self.min):
            raise ArgumentError("Box min must be below max componentwise")

    @property
    def lower(self) -> np.ndarray:
        return self.min

    @property
    def upper(self) -> np.ndarray:
        return self.max

    @property
    def bounding_radius(self) -> float:
        return float(np.linalg.norm(self.max - self.min) / 2)

    @property
    def centroid(self) -> np.ndarray:
        return (self.min + self.max) / 2

    def transformed(self, translation: np.ndarray, scale: float) -> "Box":
        return Box((self.min + translation) * scale, (self.max + translation) * scale, self.albedo)

    def to_dict(self) -> dict[str, Any]:
        return {"type": "box", "min": self.min.tolist(), "max": self.max.tolist(), "albedo": self.albedo.tolist()}


Primitive = Union[Sphere, Box]


@dataclass(frozen=True, eq=False)
class SyntheticScene:
    primitives: tuple[Primitive, ...]
    background: np.ndarray = field(default_factory=lambda: np.zeros(3))
    light_direction: np.ndarray = field(default_factory=lambda: np.array(LIGHT_DIRECTION))

    def __post_init__(self) -> None:
        object.__setattr__(self, "primitives", tuple(self.primitives))
        object.__setattr__(self, "background", _albedo(self.background))
        light = np.asarray(self.light_direction, dtype=np.float64).reshape(3)
        norm = np.linalg.norm(light)
        if norm < 1e-12:
            raise ArgumentError("Light direction must be nonzero")
        # unit vectors are stored as given
        if abs(norm - 1.0) > 1e-12:
            light = light / norm
        object.__setattr__(self, "light_direction", light)

    def transformed(self, translation: np.ndarray, scale: float = 1.0) -> "SyntheticScene":
        """Apply p -> (p + translation) * scale to every primitive."""
        translation = np.asarray(translation, dtype=np.float64)
        return SyntheticScene(
            primitives=tuple(p.transformed(translation, scale) for p in self.primitives),
            background=self.background,
            light_direction=self.light_direction,
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "primitives": [p.to_dict() for p in self.primitives],
            "background": self.background.tolist(),
            "light_direction": self.light_direction.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "SyntheticScene":
        primitives: list[Primitive] = []
        try:
            for item in data["primitives"]:
                if item["type"] == "sphere":
                    primitives.append(Sphere(item["center"], float(item["radius"]), item["albedo"]))
                elif item["type"] == "box":
                    primitives.append(Box(item["min"], item["max"], item["albedo"]))
                else:
                    raise ArgumentError(f"Unknown primitive type '{item['type']}'")
            return cls(
                primitives=tuple(primitives),
                background=data.get("background", [0.0, 0.0, 0.0]),
                light_direction=data.get("light_direction", LIGHT_DIRECTION),
            )
        except (KeyError, TypeError) as exc:
            raise ArgumentError(f"Malformed scene record: {exc}") from exc
