"""Input validation utilities."""

from pathlib import Path

import numpy as np

from nsdlab.core.exceptions import DataError, DimensionError, FileOperationError


def validate_file_exists(file_path: str | Path) -> Path:
    """Validate that a file exists.

    Raises:
        FileOperationError: If the path is missing or not a file
    """
    path = Path(file_path)
    if not path.exists():
        msg = f"File not found: {file_path}"
        raise FileOperationError(msg)
    if not path.is_file():
        msg = f"Path is not a file: {file_path}"
        raise FileOperationError(msg)
    return path


def validate_image_batch(images: np.ndarray, name: str = "images") -> np.ndarray:
    """Validate a ``(B, C, H, W)`` batch of finite values.

    Raises:
        DimensionError: On the wrong rank or an empty batch
        DataError: On NaN or infinite values
    """
    array = np.asarray(images)
    if array.ndim != 4:
        msg = f"{name} must have shape (B, C, H, W), got {array.shape}"
        raise DimensionError(msg)
    if array.shape[0] == 0:
        msg = f"{name} is empty"
        raise DimensionError(msg)
    if not np.all(np.isfinite(array)):
        msg = f"{name} contains NaN or infinite values"
        raise DataError(msg)
    return array


def validate_labels(labels: np.ndarray, num_classes: int) -> np.ndarray:
    """Validate integer labels in ``[0, num_classes)``.

    Raises:
        DataError: If a label is out of range
    """
    array = np.asarray(labels, dtype=np.int64)
    if array.size and (array.min() < 0 or array.max() >= num_classes):
        msg = f"Labels must lie in [0, {num_classes}), got range [{array.min()}, {array.max()}]"
        raise DataError(msg)
    return array
