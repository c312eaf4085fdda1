"""Spectrum tensors, separable kernels and the distillation state.

A synthetic dataset is stored as ``N_T`` spectrum tensors of shape
``(t1, t2, t3, t4)`` and ``N_K`` separable kernels, each holding one factor
``(t_n, u_n)`` per mode. Every (tensor, kernel) pair decodes into ``u1``
images of shape ``(u2, u3, u4)``.

States are immutable: an outer update builds a new state around new leaves.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np

from nsdlab.core.exceptions import ConfigError, DimensionError
from nsdlab.core.types import LabelRule, TransformKind
from nsdlab.diffmath import Node


MODES = (1, 2, 3, 4)


def spectrum_name(index: int) -> str:
    return f"spectrum/{index}"


def factor_name(kernel_id: int, mode: int) -> str:
    return f"kernel/{kernel_id}/mode{mode}"


@dataclass(frozen=True)
class SpectrumTensor:
    """Learnable compressed block ``(t1, t2, t3, t4)``.

    Attributes:
        values: Trainable leaf holding the coefficients
        class_id: Class of the tensor under the per-class-tensors rule
        index: Position among the state's tensors (0-based)
    """

    values: Node
    class_id: int
    index: int

    def __post_init__(self) -> None:
        if self.values.ndim != 4 or min(self.values.shape) < 1:
            msg = f"Spectrum tensor {self.index} must be 4-mode with positive extents, got {self.values.shape}"
            raise DimensionError(msg)

    @property
    def dims(self) -> tuple[int, int, int, int]:
        return self.values.shape  # type: ignore[return-value]

    @property
    def name(self) -> str:
        return spectrum_name(self.index)


@dataclass(frozen=True)
class KernelFactor:
    """One mode's sub-kernel ``(t_n, u_n)``.

    Attributes:
        mode: Mode index in 1..4
        values: Leaf (trainable) or constant (frozen)
        kind: Transform the factor was built from
        analytic: Reconstructible from code, so it costs no storage when frozen
    """

    mode: int
    values: Node
    kind: TransformKind = TransformKind.RANDOM
    analytic: bool = False

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            msg = f"Kernel factor mode must be in 1..4, got {self.mode}"
            raise DimensionError(msg)
        if self.values.ndim != 2 or min(self.values.shape) < 1:
            msg = f"Mode-{self.mode} factor must be a non-empty matrix, got {self.values.shape}"
            raise DimensionError(msg)

    @property
    def trainable(self) -> bool:
        return self.values.requires_grad

    @property
    def in_extent(self) -> int:
        return int(self.values.shape[0])

    @property
    def out_extent(self) -> int:
        return int(self.values.shape[1])

    @property
    def stored_scalars(self) -> int:
        """Scalars that must be shipped: frozen analytic factors cost nothing."""
        if self.analytic and not self.trainable:
            return 0
        return self.in_extent * self.out_extent


@dataclass(frozen=True)
class SeparableKernel:
    """Four factors, one per mode."""

    factors: tuple[KernelFactor, KernelFactor, KernelFactor, KernelFactor]
    kernel_id: int

    def __post_init__(self) -> None:
        modes = tuple(f.mode for f in self.factors)
        if modes != MODES:
            msg = f"A separable kernel needs factors for modes 1,2,3,4 in order, got {modes}"
            raise DimensionError(msg)
        mode1 = self.factors[0]
        if mode1.in_extent > mode1.out_extent:
            msg = f"Mode-1 factor of kernel {self.kernel_id} must satisfy t1 <= u1, got {mode1.in_extent} > {mode1.out_extent}"
            raise DimensionError(msg)

    @property
    def in_extents(self) -> tuple[int, int, int, int]:
        return tuple(f.in_extent for f in self.factors)  # type: ignore[return-value]

    @property
    def out_extents(self) -> tuple[int, int, int, int]:
        return tuple(f.out_extent for f in self.factors)  # type: ignore[return-value]

    def factor(self, mode: int) -> KernelFactor:
        return self.factors[mode - 1]


@dataclass
class OuterOptimizerState:
    """Momentum buffers keyed by leaf name, plus the completed step count."""

    velocity: dict[str, np.ndarray] = field(default_factory=dict)
    step: int = 0


def assign_labels(rule: LabelRule, num_classes: int, n_tensors: int, n_kernels: int) -> np.ndarray:
    """Class of every pair, ordered by pair index (tensor-major).

    Returns:
        Integer array of length ``n_tensors * n_kernels``
    """
    pairs = np.arange(n_tensors * n_kernels)
    tensor_idx, kernel_idx = np.divmod(pairs, n_kernels)
    if rule is LabelRule.PER_CLASS_TENSORS:
        return (tensor_idx * num_classes) // n_tensors
    if rule is LabelRule.PER_CLASS_KERNELS:
        return (kernel_idx * num_classes) // n_kernels
    return (pairs * num_classes) // pairs.size


@dataclass(frozen=True)
class DistillState:
    """Everything that defines a condensed dataset.

    Attributes:
        tensors: Spectrum tensors
        kernels: Separable kernels
        num_classes: Number of classes C
        label_rule: How pairs are labeled
        optimizer: Outer momentum buffers and step count
        band_probs: DWT band keep probabilities (LH, HL, HH), if band sampling is on
    """

    tensors: tuple[SpectrumTensor, ...]
    kernels: tuple[SeparableKernel, ...]
    num_classes: int
    label_rule: LabelRule = LabelRule.PER_CLASS_TENSORS
    optimizer: OuterOptimizerState = field(default_factory=OuterOptimizerState)
    band_probs: tuple[float, float, float] | None = None

    def __post_init__(self) -> None:
        if not self.tensors or not self.kernels:
            msg = f"A state needs at least one tensor and one kernel, got {len(self.tensors)} and {len(self.kernels)}"
            raise ConfigError(msg)
        for kernel in self.kernels:
            for tensor in self.tensors:
                for mode, (t_ext, k_ext) in enumerate(zip(tensor.dims, kernel.in_extents, strict=True), start=1):
                    if t_ext != k_ext:
                        msg = (
                            f"Tensor {tensor.index} and kernel {kernel.kernel_id} disagree at mode {mode}: "
                            f"{t_ext} vs {k_ext}"
                        )
                        raise DimensionError(msg)
        out = {k.out_extents for k in self.kernels}
        if len(out) != 1:
            msg = f"All kernels must decode to the same image shape, got {sorted(out)}"
            raise DimensionError(msg)

    @property
    def n_tensors(self) -> int:
        return len(self.tensors)

    @property
    def n_kernels(self) -> int:
        return len(self.kernels)

    @property
    def n_pairs(self) -> int:
        return self.n_tensors * self.n_kernels

    @property
    def tensor_dims(self) -> tuple[int, int, int, int]:
        return self.tensors[0].dims

    @property
    def out_extents(self) -> tuple[int, int, int, int]:
        return self.kernels[0].out_extents

    @property
    def images_per_pair(self) -> int:
        return self.out_extents[0]

    @property
    def image_shape(self) -> tuple[int, int, int]:
        return self.out_extents[1:]  # type: ignore[return-value]

    @property
    def step(self) -> int:
        return self.optimizer.step

    def pair_labels(self) -> np.ndarray:
        return assign_labels(self.label_rule, self.num_classes, self.n_tensors, self.n_kernels)

    def named_nodes(self) -> dict[str, Node]:
        """Every tensor and factor by storage name."""
        nodes = {t.name: t.values for t in self.tensors}
        for kernel in self.kernels:
            for f in kernel.factors:
                nodes[factor_name(kernel.kernel_id, f.mode)] = f.values
        return nodes

    def trainable_leaves(self) -> dict[str, Node]:
        return {name: node for name, node in self.named_nodes().items() if node.requires_grad}

    def with_values(self, updates: dict[str, np.ndarray], optimizer: OuterOptimizerState | None = None) -> DistillState:
        """New state where the named arrays are replaced by fresh leaves.

        Trainability and factor metadata are preserved.
        """

        def refresh(name: str, node: Node) -> Node:
            if name not in updates:
                return node
            return Node.leaf(updates[name], trainable=node.requires_grad, name=name)

        tensors = tuple(replace(t, values=refresh(t.name, t.values)) for t in self.tensors)
        kernels = tuple(
            replace(
                k,
                factors=tuple(  # type: ignore[arg-type]
                    replace(f, values=refresh(factor_name(k.kernel_id, f.mode), f.values)) for f in k.factors
                ),
            )
            for k in self.kernels
        )
        return replace(
            self,
            tensors=tensors,
            kernels=kernels,
            optimizer=optimizer if optimizer is not None else self.optimizer,
        )

    def digest(self) -> str:
        """SHA-256 over every stored array and the label rule."""
        h = hashlib.sha256()
        for name, node in sorted(self.named_nodes().items()):
            h.update(name.encode("utf-8"))
            h.update(np.ascontiguousarray(node.value).tobytes())
        h.update(self.label_rule.value.encode("utf-8"))
        return h.hexdigest()

    def describe(self) -> dict[str, Any]:
        """Metadata record for persistence."""
        return {
            "num_classes": self.num_classes,
            "label_rule": self.label_rule.value,
            "step": self.optimizer.step,
            "tensor_dims": list(self.tensor_dims),
            "out_extents": list(self.out_extents),
            "n_tensors": self.n_tensors,
            "n_kernels": self.n_kernels,
            "band_probs": list(self.band_probs) if self.band_probs is not None else None,
            "factors": [
                {
                    "kernel": k.kernel_id,
                    "mode": f.mode,
                    "kind": f.kind.value,
                    "trainable": f.trainable,
                    "analytic": f.analytic,
                }
                for k in self.kernels
                for f in k.factors
            ],
        }
