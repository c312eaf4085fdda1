"""Storage accounting: spectrum scalars plus stored kernel scalars vs. the IPC budget."""

from __future__ import annotations

import math

from nsdlab.core.types import BudgetReport, BudgetSpec, TransformKind

from .models import DistillState


SPATIAL_MODES = (3, 4)


def factor_kind(kind: TransformKind, mode: int) -> TransformKind:
    """Kind used for ``mode``: transforms act on the spatial modes, RANDOM elsewhere."""
    if kind is TransformKind.IDENTITY or mode in SPATIAL_MODES:
        return kind
    return TransformKind.RANDOM


def factor_cost(kind: TransformKind, mode: int, t: int, u: int) -> int:
    """Stored scalars of one factor; frozen analytic factors are free."""
    used = factor_kind(kind, mode)
    if used.analytic and not used.trainable:
        return 0
    return t * u


def planned_count(
    tensor_dims: tuple[int, int, int, int],
    out_extents: tuple[int, int, int, int],
    n_tensors: int,
    n_kernels: int,
    kind: TransformKind,
) -> int:
    """Stored scalars of a state that has not been built yet."""
    kernel = sum(
        factor_cost(kind, mode, t, u) for mode, (t, u) in enumerate(zip(tensor_dims, out_extents, strict=True), start=1)
    )
    return n_tensors * math.prod(tensor_dims) + n_kernels * kernel


def parameter_count(state: DistillState) -> int:
    """``sum_i prod_n t_n`` over tensors plus the stored scalars of every kernel factor."""
    spectra = sum(math.prod(t.dims) for t in state.tensors)
    kernels = sum(f.stored_scalars for k in state.kernels for f in k.factors)
    return spectra + kernels


def full_kernel_count(state: DistillState) -> int:
    """Scalars a dense (non-separable) kernel would need: ``prod t_n * prod u_n`` per kernel."""
    return sum(math.prod(t.dims) for t in state.tensors) + sum(
        math.prod(k.in_extents) * math.prod(k.out_extents) for k in state.kernels
    )


def budget_report(stored: int, budget: BudgetSpec) -> BudgetReport:
    allowed = budget.budget_scalars
    return BudgetReport(ok=stored <= allowed, stored=stored, allowed=allowed, utilization=stored / allowed)


def budget_check(state: DistillState, budget: BudgetSpec) -> BudgetReport:
    """Compare stored scalars with ``C * ipc * size(image)``.

    Over budget is reported, never raised; the boundary is inclusive.
    """
    return budget_report(parameter_count(state), budget)
