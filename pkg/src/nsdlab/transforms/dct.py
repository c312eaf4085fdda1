"""Cosine transform kernels.

``K[i, j] = cos(pi / n * (j + 0.5) * (i + 0.5))`` for an ``m x n`` kernel.
Its inverse is the transpose scaled by ``2 / n``.
"""

import numpy as np

from nsdlab.core.exceptions import RangeError


def dct_kernel(m: int, n: int) -> np.ndarray:
    """Cosine kernel with ``m`` frequency rows and ``n`` sample columns.

    Args:
        m: Rows (coefficients)
        n: Columns (samples)

    Returns:
        Array ``(m, n)``
    """
    if m < 1 or n < 1:
        msg = f"DCT kernel extents must be >= 1, got ({m}, {n})"
        raise RangeError(msg)
    i = np.arange(m, dtype=np.float64).reshape(m, 1)
    j = np.arange(n, dtype=np.float64).reshape(1, n)
    return np.cos(np.pi / n * (j + 0.5) * (i + 0.5))


def dct_inverse_kernel(m: int, n: int) -> np.ndarray:
    """``(2 / n) * K.T``, shape ``(n, m)``.

    ``dct_inverse_kernel(m, n) @ dct_kernel(m, n)`` is the identity when
    ``m == n`` and an orthogonal projection when ``m < n``.
    """
    return (2.0 / n) * dct_kernel(m, n).T


def dct2(image: np.ndarray, rows: int | None = None, cols: int | None = None) -> np.ndarray:
    """Separable 2-D transform ``K_l X K_r`` of the last two axes.

    Args:
        image: Array ``(..., H, W)``
        rows: Coefficients kept along H (default H)
        cols: Coefficients kept along W (default W)
    """
    height, width = image.shape[-2:]
    left = dct_kernel(rows or height, height)
    right = dct_kernel(cols or width, width).T
    return left @ image @ right


def idct2(coefficients: np.ndarray, height: int, width: int) -> np.ndarray:
    """Inverse of :func:`dct2` back to ``(..., height, width)``."""
    rows, cols = coefficients.shape[-2:]
    left = dct_inverse_kernel(rows, height)
    right = dct_inverse_kernel(cols, width).T
    return left @ coefficients @ right


def dct_synthesis_factor(t: int, u: int) -> np.ndarray:
    """Mode factor ``(t, u)`` decoding ``t`` coefficients into ``u`` samples."""
    return dct_inverse_kernel(t, u).T
