"""Image resampling and file I/O helpers."""

from pathlib import Path
from typing import Union

import numpy as np
from PIL import Image

from ..errors import ArgumentError

LUMA = np.array([0.299, 0.587, 0.114])


def luminance(image: np.ndarray) -> np.ndarray:
    return np.asarray(image, dtype=np.float64) @ LUMA


def downsample_area(image: np.ndarray, height: int, width: int) -> np.ndarray:
    """Area-average an H x W (x C) image to height x width.

    Integer factors use exact block means; other sizes fall back to Pillow's
    box filter per channel.
    """
    image = np.asarray(image, dtype=np.float64)
    h, w = image.shape[:2]
    if (h, w) == (height, width):
        return image.copy()
    if h % height == 0 and w % width == 0:
        fy, fx = h // height, w // width
        blocks = image.reshape(height, fy, width, fx, *image.shape[2:])
        return blocks.mean(axis=(1, 3))
    channels = image if image.ndim == 3 else image[..., None]
    resized = [
        np.asarray(Image.fromarray(channels[..., c].astype(np.float32)).resize((width, height), Image.Resampling.BOX))
        for c in range(channels.shape[-1])
    ]
    out = np.stack(resized, axis=-1).astype(np.float64)
    return out if image.ndim == 3 else out[..., 0]


def downsample_area_adjoint(grad: np.ndarray, height: int, width: int) -> np.ndarray:
    """Adjoint of the integer-factor block mean: spread each gradient over its block."""
    grad = np.asarray(grad, dtype=np.float64)
    h, w = grad.shape[:2]
    if (h, w) == (height, width):
        return grad.copy()
    if height % h or width % w:
        raise ArgumentError(f"Adjoint needs an integer factor, got {(h, w)} -> {(height, width)}")
    fy, fx = height // h, width // w
    return np.repeat(np.repeat(grad, fy, axis=0), fx, axis=1) / (fy * fx)


def to_uint8(image: np.ndarray) -> np.ndarray:
    return np.round(np.clip(image, 0.0, 1.0) * 255.0).astype(np.uint8)


def write_png(path: Union[str, Path], image: np.ndarray) -> Path:
    path = Path(path)
    Image.fromarray(to_uint8(image)).save(path, format="PNG", optimize=False)
    return path


def read_png(path: Union[str, Path]) -> np.ndarray:
    with Image.open(path) as img:
        return np.asarray(img.convert("RGB"), dtype=np.float64) / 255.0


def write_pfm(path: Union[str, Path], data: np.ndarray) -> Path:
    """Single-channel little-endian PFM (scale -1.0), bottom row first."""
    path = Path(path)
    data = np.asarray(data, dtype="<f4")
    if data.ndim != 2:
        raise ArgumentError(f"PFM writer expects a 2-D map, got shape {data.shape}")
    header = f"Pf\n{data.shape[1]} {data.shape[0]}\n-1.0\n".encode("ascii")
    path.write_bytes(header + np.flipud(data).tobytes())
    return path


def read_pfm(path: Union[str, Path]) -> np.ndarray:
    raw = Path(path).read_bytes()
    parts = raw.split(b"\n", 3)
    if parts[0] != b"Pf":
        raise ArgumentError(f"{path} is not a single-channel PFM")
    width, height = (int(v) for v in parts[1].split())
    dtype = "<f4" if float(parts[2]) < 0 else ">f4"
    data = np.frombuffer(parts[3], dtype=dtype, count=width * height).reshape(height, width)
    return np.flipud(data).astype(np.float64)
