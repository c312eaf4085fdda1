"""nsdlab - dataset distillation by neural spectral decomposition.

A condensed dataset is stored as a few small spectrum tensors and separable
kernels; every (tensor, kernel) pair decodes into a block of synthetic
images. The tensors and kernels are learned by matching the training
trajectories of expert networks.

Quick Start:
    >>> import nsdlab
    >>> cfg = nsdlab.load_config(overrides=["distill.iterations=20"])
    >>> plan = nsdlab.plan_budget(cfg)
    >>> plan.report.ok
    True
"""

from __future__ import annotations

from pathlib import Path

from .__version__ import __author__, __license__, __version__
from .core import (
    BudgetReport,
    BudgetSpec,
    ConfigError,
    DistillConfig,
    EvalReport,
    NsdLabError,
    RunConfig,
    TransformKind,
    load_config,
)
from .decomposition import DecompositionPlan, DistillState
from .formats import register_default_formats
from .matching import load_checkpoint


register_default_formats()

# Level 1 facade


def plan_budget(cfg: RunConfig | None = None) -> DecompositionPlan:
    """Resolve the decomposition extents for ``cfg`` without loading any data.

    Examples:
        >>> plan_budget(load_config(overrides=["budget.ipc=10"])).tensor_dims[2]
        4
    """
    from .pipeline import resolve_plan_for_budget  # noqa: PLC0415

    return resolve_plan_for_budget(cfg or load_config())


def distill_run(cfg: RunConfig | None = None, *, persist: bool = True) -> DistillState:
    """Load data, train experts if needed, distill and return the final state."""
    from . import pipeline  # noqa: PLC0415

    ctx = pipeline.prepare(cfg or load_config())
    bank = pipeline.run_experts(ctx) if pipeline.needs_bank(ctx.cfg) else None
    return pipeline.run_distill(ctx, bank, persist=persist).state


def evaluate(checkpoint: str | Path, cfg: RunConfig | None = None) -> EvalReport:
    """Evaluate a saved checkpoint with the configured protocol."""
    from . import pipeline  # noqa: PLC0415

    ctx = pipeline.prepare(cfg or load_config())
    state, _ = load_checkpoint(checkpoint)
    return pipeline.run_eval(ctx, state)


def export(checkpoint: str | Path, out: str | Path, grid_cols: int = 8) -> Path:
    """Write the images of a saved checkpoint as a PGM/PPM grid."""
    from .evalharness import export_images  # noqa: PLC0415

    state, _ = load_checkpoint(checkpoint)
    return export_images(state, out, grid_cols)


__all__ = [
    "BudgetReport",
    "BudgetSpec",
    "ConfigError",
    "DecompositionPlan",
    "DistillConfig",
    "DistillState",
    "EvalReport",
    "NsdLabError",
    "RunConfig",
    "TransformKind",
    "__author__",
    "__license__",
    "__version__",
    "distill_run",
    "evaluate",
    "export",
    "load_config",
    "plan_budget",
]
