"""Pose path and perturbation models for novel-view sampling."""

from dataclasses import dataclass, field
from typing import Any, Literal, Optional

import numpy as np

from config import PERTURB_LOOKAT_RADIUS, PERTURB_POSITION_RADIUS, PERTURB_UP_ANGLE_MAX
from ..errors import ArgumentError, DegenerateGeometryError, InsufficientDataError

PathKind = Literal["ellipse", "bspline"]


@dataclass(frozen=True)
class PerturbSpec:
    """Ranges of the random offsets applied to a base path pose."""

    position_radius: float = PERTURB_POSITION_RADIUS
    lookat_radius: float = PERTURB_LOOKAT_RADIUS
    up_angle_max: float = PERTURB_UP_ANGLE_MAX

    def __post_init__(self) -> None:
        for name in ("position_radius", "lookat_radius", "up_angle_max"):
            value = float(getattr(self, name))
            if not np.isfinite(value) or value < 0:
                raise ArgumentError(f"{name} must be finite and >= 0, got {value}")

    @classmethod
    def zero(cls) -> "PerturbSpec":
        return cls(0.0, 0.0, 0.0)


@dataclass(frozen=True)
class Intrinsics:
    """Pinhole intrinsics shared by every pose drawn from a path."""

    focal_px: float
    principal_point: tuple[float, float]
    image_size: tuple[int, int]


@dataclass(frozen=True, eq=False)
class EllipseParams:
    center: np.ndarray
    axis_u: np.ndarray
    axis_v: np.ndarray
    look_at: np.ndarray
    up: np.ndarray


@dataclass(frozen=True, eq=False)
class BSplineParams:
    control_points: np.ndarray
    degree: int
    look_ats: np.ndarray
    up: np.ndarray


@dataclass(frozen=True, eq=False)
class PosePath:
    """A fitted camera path: either a closed ellipse or an open B-spline."""

    kind: PathKind
    intrinsics: Intrinsics
    ellipse: Optional[EllipseParams] = field(default=None)
    bspline: Optional[BSplineParams] = field(default=None)

    def __post_init__(self) -> None:
        if self.kind == "ellipse":
            if self.ellipse is None:
                raise ArgumentError("Ellipse path requires ellipse parameters")
            u = np.asarray(self.ellipse.axis_u, dtype=np.float64)
            v = np.asarray(self.ellipse.axis_v, dtype=np.float64)
            nu, nv = np.linalg.norm(u), np.linalg.norm(v)
            if nu <= 1e-9 or nv <= 1e-9:
                raise DegenerateGeometryError("Ellipse axes must have non-zero length")
            if abs(np.dot(u / nu, v / nv)) >= 0.999:
                raise DegenerateGeometryError("Ellipse axes are parallel")
        elif self.kind == "bspline":
            if self.bspline is None:
                raise ArgumentError("B-spline path requires spline parameters")
            n = len(self.bspline.control_points)
            if self.bspline.degree < 1:
                raise ArgumentError(f"B-spline degree must be >= 1, got {self.bspline.degree}")
            if n < self.bspline.degree + 1:
                raise InsufficientDataError(
                    f"Degree {self.bspline.degree} spline needs {self.bspline.degree + 1} control points, got {n}"
                )
        else:
            raise ArgumentError(f"Unknown path kind '{self.kind}'")

    def to_dict(self) -> dict[str, Any]:
        data: dict[str, Any] = {
            "kind": self.kind,
            "intrinsics": {
                "focal_px": self.intrinsics.focal_px,
                "principal_point": list(self.intrinsics.principal_point),
                "image_size": list(self.intrinsics.image_size),
            },
        }
        if self.ellipse is not None:
            data["ellipse"] = {
                name: np.asarray(getattr(self.ellipse, name)).tolist()
                for name in ("center", "axis_u", "axis_v", "look_at", "up")
            }
        if self.bspline is not None:
            data["bspline"] = {
                "control_points": np.asarray(self.bspline.control_points).tolist(),
                "degree": self.bspline.degree,
                "look_ats": np.asarray(self.bspline.look_ats).tolist(),
                "up": np.asarray(self.bspline.up).tolist(),
            }
        return data

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "PosePath":
        try:
            intr = data["intrinsics"]
            intrinsics = Intrinsics(
                focal_px=float(intr["focal_px"]),
                principal_point=tuple(float(v) for v in intr["principal_point"]),
                image_size=tuple(int(v) for v in intr["image_size"]),
            )
            kind = data["kind"]
            if kind == "ellipse":
                e = data["ellipse"]
                ellipse = EllipseParams(**{name: np.asarray(e[name], dtype=np.float64) for name in e})
                return cls(kind=kind, intrinsics=intrinsics, ellipse=ellipse)
            b = data["bspline"]
            spline = BSplineParams(
                control_points=np.asarray(b["control_points"], dtype=np.float64),
                degree=int(b["degree"]),
                look_ats=np.asarray(b["look_ats"], dtype=np.float64),
                up=np.asarray(b["up"], dtype=np.float64),
            )
            return cls(kind=kind, intrinsics=intrinsics, bspline=spline)
        except (KeyError, TypeError) as exc:
            raise ArgumentError(f"Malformed path record: {exc}") from exc
