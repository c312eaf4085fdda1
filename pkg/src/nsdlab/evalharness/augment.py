"""Evaluation-time augmentation: random horizontal flip and padded random crop."""

from __future__ import annotations

import numpy as np


PAD = 2


def random_flip(images: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Mirror each image along its width with probability 1/2."""
    flip = rng.random(images.shape[0]) < 0.5
    out = np.array(images)
    out[flip] = out[flip][..., ::-1]
    return out


def random_crop(images: np.ndarray, rng: np.random.Generator, pad: int = PAD) -> np.ndarray:
    """Zero-pad by ``pad`` pixels and crop back to the input size at a random offset."""
    if pad == 0:
        return np.array(images)
    n, _, h, w = images.shape
    padded = np.pad(images, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    dy = rng.integers(0, 2 * pad + 1, size=n)
    dx = rng.integers(0, 2 * pad + 1, size=n)
    return np.stack([padded[k, :, dy[k] : dy[k] + h, dx[k] : dx[k] + w] for k in range(n)])


def flip_and_crop(images: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    return random_crop(random_flip(images, rng), rng)
