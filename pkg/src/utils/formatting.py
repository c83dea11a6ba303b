"""Formatting utilities for display."""

from config import PSNR_CAP


def format_db(value: float, precision: int = 2) -> str:
    """Format a PSNR value in decibels; infinite values show as the cap."""
    if value != value:
        return "n/a"
    return f"{min(value, PSNR_CAP):.{precision}f} dB"


def format_ratio(value: float, precision: int = 4) -> str:
    return f"{value:.{precision}f}"


def format_seconds(seconds: float) -> str:
    """Format a duration as seconds, or minutes and seconds past one minute."""
    if seconds >= 60:
        minutes, rest = divmod(seconds, 60)
        return f"{int(minutes)}m {rest:04.1f}s"
    return f"{seconds:.2f}s"


def format_loss(value: float) -> str:
    """Format a loss value, switching to scientific notation when small."""
    if value != 0 and abs(value) < 1e-3:
        return f"{value:.3e}"
    return f"{value:.4f}"


def format_delta(value: float, precision: int = 2) -> str:
    """Format a signed decibel delta."""
    return f"{value:+.{precision}f} dB"
