"""Exception types raised across the package."""

from typing import Optional


class ReconError(Exception):
    """Base class for every error raised by this package."""


class ArgumentError(ReconError, ValueError):
    """An argument violates an operation's precondition."""


class BoundsError(ArgumentError):
    """An index, pixel or count lies outside its valid range."""


class BehindCameraError(ArgumentError):
    """A point does not lie strictly in front of the camera."""


class DegenerateGeometryError(ReconError, ValueError):
    """Camera or path geometry is rank deficient."""


class InsufficientDataError(ReconError, ValueError):
    """Too few poses or observations for the requested fit."""


class CapacityError(ReconError, RuntimeError):
    """Random placement exhausted its rejection budget."""


class InvalidStateError(ReconError, RuntimeError):
    """Retained state no longer matches the object it was taken from."""


class ConfigError(ReconError, ValueError):
    """A run configuration could not be parsed or validated."""


class IterationError(ReconError, RuntimeError):
    """An optimization iteration failed."""

    def __init__(self, iteration: int, cause: Optional[BaseException] = None) -> None:
        self.iteration = iteration
        detail = f": {cause}" if cause is not None else ""
        super().__init__(f"Optimization failed at iteration {iteration}{detail}")
