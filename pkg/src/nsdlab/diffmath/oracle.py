"""Central finite differences, the reference every analytic gradient is checked against."""

from __future__ import annotations

from collections.abc import Callable, Iterable

import numpy as np

from nsdlab.core.exceptions import RangeError

from .graph import DTYPE, Node


def finite_difference_oracle(
    loss_fn: Callable[[np.ndarray], float],
    leaf: Node | np.ndarray,
    h: float = 1e-3,
    coordinates: Iterable[tuple[int, ...]] | None = None,
) -> np.ndarray:
    """Estimate ``dloss/dleaf`` entrywise by central differences.

    Args:
        loss_fn: Evaluates the loss for a given value of the leaf; must be
            deterministic
        leaf: The point to differentiate at
        h: Step size (> 0)
        coordinates: Optional subset of entries; others are left at zero

    Returns:
        Array shaped like the leaf

    Raises:
        RangeError: If ``h`` is not positive
    """
    if h <= 0:
        msg = f"Finite-difference step must be positive, got {h}"
        raise RangeError(msg)
    base = np.array(leaf.value if isinstance(leaf, Node) else leaf, dtype=DTYPE)
    estimate = np.zeros_like(base)
    targets = list(coordinates) if coordinates is not None else list(np.ndindex(base.shape))
    for index in targets:
        shifted = base.copy()
        shifted[index] = base[index] + h
        upper = float(loss_fn(shifted))
        shifted[index] = base[index] - h
        lower = float(loss_fn(shifted))
        estimate[index] = (upper - lower) / (2.0 * h)
    return estimate


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-8) -> float:
    """Max-norm relative error ``|a - n| / max(|a|, |n|, floor)``."""
    scale = max(float(np.max(np.abs(analytic))), float(np.max(np.abs(numeric))), floor)
    return float(np.max(np.abs(analytic - numeric)) / scale)
