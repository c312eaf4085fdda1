"""Inter-dimensional cosine similarity of image batches along the batch, height or width axis."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any

import numpy as np
from sklearn.metrics.pairwise import cosine_similarity  # type: ignore

from nsdlab.core.exceptions import ConfigError, DimensionError


logger = logging.getLogger(__name__)

AXES = {"B": 0, "H": 2, "W": 3}


@dataclass(frozen=True)
class SimilarityMatrix:
    """Pairwise cosine similarity of slices along one axis.

    Attributes:
        axis: "B", "H" or "W"
        matrix: Symmetric ``(n, n)`` matrix with unit diagonal
        zero_slices: Indices of all-zero slices (similarity 0 to everything else)
    """

    axis: str
    matrix: np.ndarray
    zero_slices: tuple[int, ...] = ()

    @property
    def size(self) -> int:
        return int(self.matrix.shape[0])

    def mean_off_diagonal(self) -> float:
        n = self.size
        if n < 2:
            return 0.0
        mask = ~np.eye(n, dtype=bool)
        return float(self.matrix[mask].mean())

    def to_dict(self) -> dict[str, Any]:
        return {
            "axis": self.axis,
            "size": self.size,
            "mean_off_diagonal": self.mean_off_diagonal(),
            "zero_slices": list(self.zero_slices),
        }


def unfold(images: np.ndarray, axis: str) -> np.ndarray:
    """Rows are slices along ``axis``, flattened over the remaining axes."""
    if axis not in AXES:
        msg = f"Similarity axis must be one of {sorted(AXES)}, got {axis!r}"
        raise ConfigError(msg)
    return np.moveaxis(np.asarray(images, dtype=np.float64), AXES[axis], 0).reshape(
        images.shape[AXES[axis]], -1
    )


def dimension_similarity(images: np.ndarray, axis: str = "B") -> SimilarityMatrix:
    """Cosine similarity between every pair of slices along ``axis``.

    Raises:
        DimensionError: If images are not ``(B, C, H, W)`` with ``B >= 2``
        ConfigError: On an unknown axis
    """
    if images.ndim != 4 or images.shape[0] < 2:
        msg = f"Similarity needs a (B, C, H, W) batch with B >= 2, got {images.shape}"
        raise DimensionError(msg)
    rows = unfold(images, axis)
    zero = np.flatnonzero(~rows.any(axis=1))
    sim = cosine_similarity(rows)
    matrix = np.clip((sim + sim.T) / 2, -1.0, 1.0)
    if zero.size:
        logger.warning("Similarity along %s: %d all-zero slices set to 0", axis, zero.size)
        matrix[zero, :] = 0.0
        matrix[:, zero] = 0.0
    np.fill_diagonal(matrix, 1.0)
    return SimilarityMatrix(axis, matrix, tuple(int(z) for z in zero))
