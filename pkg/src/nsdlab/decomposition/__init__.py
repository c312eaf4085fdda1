"""Spectrum tensors, separable kernels, synthesis and budget accounting."""

from .budget import budget_check, factor_cost, full_kernel_count, parameter_count, planned_count
from .models import (
    DistillState,
    KernelFactor,
    OuterOptimizerState,
    SeparableKernel,
    SpectrumTensor,
    assign_labels,
    factor_name,
    spectrum_name,
)
from .planning import DecompositionPlan, plan_dimensions, raw_pixel_plan, spatial_extent
from .synthesis import (
    ORACLE_CAP,
    compose_full_kernel,
    contract_full_kernel,
    pair_index,
    synthesize_dataset,
    synthesize_pair,
)


__all__ = [
    "ORACLE_CAP",
    "DecompositionPlan",
    "DistillState",
    "KernelFactor",
    "OuterOptimizerState",
    "SeparableKernel",
    "SpectrumTensor",
    "assign_labels",
    "budget_check",
    "compose_full_kernel",
    "contract_full_kernel",
    "factor_cost",
    "factor_name",
    "full_kernel_count",
    "pair_index",
    "parameter_count",
    "plan_dimensions",
    "planned_count",
    "raw_pixel_plan",
    "spatial_extent",
    "spectrum_name",
    "synthesize_dataset",
    "synthesize_pair",
]
