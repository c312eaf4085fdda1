"""Truncated SVD initialization."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from nsdlab.core.exceptions import DimensionError, RangeError


@dataclass(frozen=True)
class TruncatedSVD:
    """Rank-n factorization ``M ~= kernel @ spectrum``.

    Attributes:
        kernel: First n columns of ``U * S``, shape ``(rows, n)``
        spectrum: First n rows of ``V^T``, shape ``(n, cols)``
        singular_values: All singular values, descending
    """

    kernel: np.ndarray
    spectrum: np.ndarray
    singular_values: np.ndarray

    @property
    def rank(self) -> int:
        return int(self.spectrum.shape[0])

    def reconstruct(self) -> np.ndarray:
        return self.kernel @ self.spectrum

    def tail_energy(self) -> float:
        """Squared Frobenius error of the truncation (sum of discarded sigma^2)."""
        return float(np.sum(self.singular_values[self.rank :] ** 2))


def truncated_svd(matrix: np.ndarray, rank: int) -> TruncatedSVD:
    """Best rank-``rank`` approximation of a 2-D array.

    Raises:
        RangeError: If rank is not in ``1..min(matrix.shape)``
    """
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2:
        msg = f"truncated_svd expects a matrix, got shape {matrix.shape}"
        raise DimensionError(msg)
    limit = min(matrix.shape)
    if not 1 <= rank <= limit:
        msg = f"Truncation rank {rank} outside 1..{limit} for a {matrix.shape[0]}x{matrix.shape[1]} matrix"
        raise RangeError(msg)
    u, s, vt = np.linalg.svd(matrix, full_matrices=False)
    return TruncatedSVD(kernel=u[:, :rank] * s[:rank], spectrum=vt[:rank], singular_values=s)


def svd_init(images: np.ndarray, rank: int) -> TruncatedSVD:
    """Factor a ``(B, C, H, W)`` batch flattened to ``(B, C*H*W)``.

    The spectrum holds the first ``rank`` rows of V^T, the kernel the first
    ``rank`` columns of U*S.
    """
    images = np.asarray(images, dtype=np.float64)
    if images.ndim != 4:
        msg = f"svd_init expects (B, C, H, W), got {images.shape}"
        raise DimensionError(msg)
    return truncated_svd(images.reshape(images.shape[0], -1), rank)


def mode_basis(images: np.ndarray, axis: int, rank: int) -> np.ndarray:
    """Leading ``rank`` right singular vectors of the ``axis`` unfolding, ``(rank, extent)``.

    Every line of ``images`` along ``axis`` becomes one ``(1, 1, extent)``
    image for :func:`svd_init`; the basis is the spectrum of that factorization.
    """
    moved = np.moveaxis(np.asarray(images, dtype=np.float64), axis, -1)
    lines = moved.reshape(-1, 1, 1, moved.shape[-1])
    return svd_init(lines, rank).spectrum
