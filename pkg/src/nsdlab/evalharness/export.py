"""Writing synthesized images as a PGM/PPM grid."""

from __future__ import annotations

import logging
import math
from pathlib import Path

import numpy as np

from nsdlab.core.exceptions import ConfigError
from nsdlab.core.registry import get_registry
from nsdlab.decomposition import DistillState
from nsdlab.matching import detached_images
from nsdlab.utils.io import write_bytes


logger = logging.getLogger(__name__)

MID_GRAY = 128
GAP = 1


def to_uint8(images: np.ndarray) -> np.ndarray:
    """Min-max scale every image independently to 0..255.

    A constant image becomes mid-gray 128.
    """
    images = np.asarray(images, dtype=np.float64)
    low = images.min(axis=(1, 2, 3), keepdims=True)
    span = images.max(axis=(1, 2, 3), keepdims=True) - low
    scaled = np.where(span > 0, (images - low) / np.where(span > 0, span, 1.0) * 255.0, float(MID_GRAY))
    return np.rint(scaled).astype(np.uint8)


def tile_grid(pixels: np.ndarray, grid_cols: int) -> np.ndarray:
    """Arrange ``(N, C, H, W)`` uint8 images row-major with a zero gap between tiles.

    Returns:
        ``(rows*H + gaps, cols*W + gaps)`` for one channel, with a trailing
        channel axis of 3 for RGB
    """
    if grid_cols < 1:
        msg = f"grid_cols must be >= 1, got {grid_cols}"
        raise ConfigError(msg)
    n, channels, h, w = pixels.shape
    if channels not in (1, 3):
        msg = f"Only 1- or 3-channel images can be exported, got {channels} channels"
        raise ConfigError(msg)
    cols = min(grid_cols, n)
    rows = math.ceil(n / cols)
    canvas = np.zeros((channels, rows * h + (rows - 1) * GAP, cols * w + (cols - 1) * GAP), dtype=np.uint8)
    for k in range(n):
        r, c = divmod(k, cols)
        y, x = r * (h + GAP), c * (w + GAP)
        canvas[:, y : y + h, x : x + w] = pixels[k]
    return canvas[0] if channels == 1 else np.moveaxis(canvas, 0, -1)


def export_array(images: np.ndarray, path: str | Path, grid_cols: int = 8) -> Path:
    """Normalize, tile and write images; P5 for grayscale, P6 for RGB.

    Raises:
        FileOperationError: If the file cannot be written
    """
    grid = tile_grid(to_uint8(images), grid_cols)
    out = Path(path)
    write_bytes(out, get_registry().get("pnm").encode(grid))
    logger.info("Wrote %d images to %s", images.shape[0], out)
    return out


def export_images(state: DistillState, path: str | Path, grid_cols: int = 8) -> Path:
    """Synthesize every image of ``state`` and write them as one grid."""
    return export_array(detached_images(state).images, path, grid_cols)
