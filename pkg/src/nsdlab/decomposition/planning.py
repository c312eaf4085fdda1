"""Resolving decomposition extents ("auto" dims) under a storage budget."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Any

from nsdlab.core.config import AUTO
from nsdlab.core.exceptions import ConfigError
from nsdlab.core.types import BudgetReport, BudgetSpec, TransformKind

from .budget import budget_report, planned_count


logger = logging.getLogger(__name__)

MAX_T1 = 4096


@dataclass(frozen=True)
class DecompositionPlan:
    """Resolved extents and their storage cost.

    Attributes:
        tensor_dims: ``(t1, t2, t3, t4)``
        out_extents: ``(u1, u2, u3, u4)``
        n_tensors: N_T
        n_kernels: N_K
        kind: Transform used for the spatial factors
        report: Budget outcome of this plan
    """

    tensor_dims: tuple[int, int, int, int]
    out_extents: tuple[int, int, int, int]
    n_tensors: int
    n_kernels: int
    kind: TransformKind
    report: BudgetReport

    @property
    def images(self) -> int:
        return self.n_tensors * self.n_kernels * self.out_extents[0]

    def to_dict(self) -> dict[str, Any]:
        return {
            "tensor_dims": list(self.tensor_dims),
            "out_extents": list(self.out_extents),
            "n_tensors": self.n_tensors,
            "n_kernels": self.n_kernels,
            "kind": self.kind.value,
            "images": self.images,
            **self.report.to_dict(),
        }


def spatial_extent(size: int, ipc: int) -> int:
    """Half resolution for ipc <= 10, seven eighths (rounded up) above."""
    if ipc <= 10:
        return max(1, size // 2)
    return math.ceil(7 * size / 8)


def mode1_out(t1: int, u1: int | str, ratio: float) -> int:
    if u1 != AUTO:
        return int(u1)
    return max(t1 + 1, math.ceil(ratio * t1))


def raw_pixel_plan(budget: BudgetSpec) -> DecompositionPlan:
    """No decomposition: one ``(ipc, C, H, W)`` block per class decoded by identity factors."""
    channels, height, width = budget.image_shape
    dims = (budget.ipc, channels, height, width)
    stored = planned_count(dims, dims, budget.num_classes, 1, TransformKind.IDENTITY)
    return DecompositionPlan(
        tensor_dims=dims,
        out_extents=dims,
        n_tensors=budget.num_classes,
        n_kernels=1,
        kind=TransformKind.IDENTITY,
        report=budget_report(stored, budget),
    )


def plan_dimensions(
    budget: BudgetSpec,
    kind: TransformKind = TransformKind.RANDOM,
    *,
    enabled: bool = True,
    t1: int | str = AUTO,
    t3: int | str = AUTO,
    u1: int | str = AUTO,
    tensors_per_class: int = 1,
    kernels: int = 1,
    u1_ratio: float = 2.0,
    rank: int | None = None,
) -> DecompositionPlan:
    """Choose extents for a decomposition.

    ``t2`` follows the channel count and ``t4`` follows ``t3`` (scaled for
    non-square images). With ``t1 = "auto"`` the largest t1 whose plan fits
    the budget is chosen, with ``u1 > t1``.

    Raises:
        ConfigError: If even ``t1 = 1`` exceeds the budget, or extents are invalid
    """
    if not enabled:
        return raw_pixel_plan(budget)

    channels, height, width = budget.image_shape
    n_tensors = budget.num_classes * tensors_per_class
    if rank is not None and kind.needs_images and t3 == AUTO:
        t3 = rank
    if t3 == AUTO:
        t3_value = spatial_extent(height, budget.ipc)
        t4_value = spatial_extent(width, budget.ipc)
    else:
        t3_value = int(t3)
        t4_value = max(1, round(int(t3) * width / height))
    if not (1 <= t3_value <= height and 1 <= t4_value <= width):
        msg = f"Spatial extents ({t3_value}, {t4_value}) must lie within the image size ({height}, {width})"
        raise ConfigError(msg)
    if u1_ratio <= 1.0 and u1 == AUTO:
        msg = f"decomposition.u1_ratio must exceed 1, got {u1_ratio}"
        raise ConfigError(msg)

    def make(t1_value: int) -> DecompositionPlan:
        u1_value = mode1_out(t1_value, u1, u1_ratio)
        if u1_value < t1_value:
            msg = f"Mode 1 must satisfy t1 <= u1, got t1={t1_value}, u1={u1_value}"
            raise ConfigError(msg)
        dims = (t1_value, channels, t3_value, t4_value)
        out = (u1_value, channels, height, width)
        stored = planned_count(dims, out, n_tensors, kernels, kind)
        return DecompositionPlan(dims, out, n_tensors, kernels, kind, budget_report(stored, budget))

    if t1 != AUTO:
        plan = make(int(t1))
        if not plan.report.ok:
            logger.warning("Requested extents use %d of %d scalars", plan.report.stored, plan.report.allowed)
        return plan

    best: DecompositionPlan | None = None
    for candidate in range(1, MAX_T1 + 1):
        if u1 != AUTO and candidate > int(u1):
            break
        plan = make(candidate)
        if not plan.report.ok:
            break
        best = plan
    if best is None:
        first = make(1)
        msg = (
            f"No feasible decomposition: even t1=1 stores {first.report.stored} scalars, "
            f"budget allows {first.report.allowed}"
        )
        raise ConfigError(msg)
    logger.debug("Resolved extents %s -> %s", best.tensor_dims, best.out_extents)
    return best
