"""Single-level orthonormal Haar wavelet analysis and synthesis."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from nsdlab.core.exceptions import ConfigError, DimensionError


SQRT_HALF = np.sqrt(0.5)


def haar_matrix(n: int) -> np.ndarray:
    """Orthonormal ``(n, n)`` Haar analysis matrix, low-pass rows first.

    Raises:
        DimensionError: If ``n`` is odd
    """
    if n < 2 or n % 2:
        msg = f"Haar transform needs an even extent, got {n}"
        raise DimensionError(msg)
    half = n // 2
    matrix = np.zeros((n, n))
    rows = np.arange(half)
    matrix[rows, 2 * rows] = SQRT_HALF
    matrix[rows, 2 * rows + 1] = SQRT_HALF
    matrix[half + rows, 2 * rows] = SQRT_HALF
    matrix[half + rows, 2 * rows + 1] = -SQRT_HALF
    return matrix


@dataclass(frozen=True)
class HaarBands:
    """Sub-bands of a ``(C, H, W)`` image, each ``(C, H/2, W/2)``.

    The first letter is the vertical (height) filter, the second the horizontal one.
    """

    ll: np.ndarray
    lh: np.ndarray
    hl: np.ndarray
    hh: np.ndarray

    def energy(self) -> float:
        return float(sum(np.sum(b**2) for b in (self.ll, self.lh, self.hl, self.hh)))


def haar_split(image: np.ndarray) -> HaarBands:
    """Split ``(C, H, W)`` into LL, LH, HL, HH.

    Raises:
        DimensionError: On odd H or W
    """
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 3:
        msg = f"haar_split expects (C, H, W), got {image.shape}"
        raise DimensionError(msg)
    _, height, width = image.shape
    rows, cols = haar_matrix(height), haar_matrix(width)
    coeff = rows @ image @ cols.T
    h, w = height // 2, width // 2
    return HaarBands(ll=coeff[:, :h, :w], lh=coeff[:, :h, w:], hl=coeff[:, h:, :w], hh=coeff[:, h:, w:])


def _quadrants(bands: HaarBands) -> np.ndarray:
    top = np.concatenate([bands.ll, bands.lh], axis=2)
    bottom = np.concatenate([bands.hl, bands.hh], axis=2)
    return np.concatenate([top, bottom], axis=1)


def haar_merge(bands: HaarBands) -> np.ndarray:
    """Inverse of :func:`haar_split`."""
    coeff = _quadrants(bands)
    _, height, width = coeff.shape
    return haar_matrix(height).T @ coeff @ haar_matrix(width)


def haar_band_sample(
    bands: HaarBands,
    rng: np.random.Generator,
    probs: tuple[float, float, float] = (0.5, 0.5, 0.5),
) -> HaarBands:
    """Zero detail bands at random; LL is always kept.

    Args:
        bands: Input sub-bands
        rng: Random generator, three uniform draws per call
        probs: Keep probabilities for (LH, HL, HH)
    """
    if len(probs) != 3 or any(not 0.0 <= p <= 1.0 for p in probs):
        msg = f"Band probabilities must be three values in [0, 1], got {probs}"
        raise ConfigError(msg)
    keep_lh, keep_hl, keep_hh = (bool(d < p) for d, p in zip(rng.random(3), probs, strict=True))
    return HaarBands(
        ll=bands.ll,
        lh=bands.lh if keep_lh else np.zeros_like(bands.lh),
        hl=bands.hl if keep_hl else np.zeros_like(bands.hl),
        hh=bands.hh if keep_hh else np.zeros_like(bands.hh),
    )


def sample_band_mask(
    t3: int,
    t4: int,
    rng: np.random.Generator,
    probs: tuple[float, float, float],
) -> np.ndarray:
    """Coefficient mask ``(1, 1, t3, t4)`` for spectra decoded by Haar factors.

    The mask is one :func:`haar_band_sample` draw over unit bands, laid out in
    the quadrant order of :func:`haar_split`.
    """
    if t3 % 2 or t4 % 2:
        msg = f"Haar coefficient extents must be even, got t3={t3}, t4={t4}"
        raise DimensionError(msg)
    unit = np.ones((1, t3 // 2, t4 // 2))
    kept = haar_band_sample(HaarBands(ll=unit, lh=unit, hl=unit, hh=unit), rng, probs)
    return _quadrants(kept).reshape(1, 1, t3, t4)


def nearest_resample(t: int, u: int) -> np.ndarray:
    """``(t, u)`` 0/1 matrix repeating each of ``t`` samples over ``u`` outputs."""
    matrix = np.zeros((t, u))
    matrix[(np.arange(u) * t) // u, np.arange(u)] = 1.0
    return matrix


def haar_synthesis_factor(t: int, u: int) -> np.ndarray:
    """Mode factor ``(t, u)``: inverse Haar on ``t`` coefficients, then resample to ``u``.

    Raises:
        ConfigError: If ``t`` is odd or larger than ``u``
    """
    if t % 2 or t > u:
        msg = f"DWT factors need an even coefficient extent no larger than the output, got t={t}, u={u}"
        raise ConfigError(msg)
    return haar_matrix(t) @ nearest_resample(t, u)
