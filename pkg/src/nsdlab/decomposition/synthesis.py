"""Decoding spectrum tensors into images."""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from nsdlab.core.exceptions import DimensionError, OracleCapError, RangeError
from nsdlab.diffmath import Node, ops

from .models import DistillState, SeparableKernel, SpectrumTensor


ORACLE_CAP = 10**6


def pair_index(i: int, j: int, n_k: int, n_t: int | None = None) -> int:
    """Global 1-based block index ``j + (i - 1) * n_k`` of the pair (i, j).

    Args:
        i: Tensor index, 1-based
        j: Kernel index, 1-based
        n_k: Number of kernels
        n_t: Number of tensors, when an upper bound on ``i`` should be enforced

    Raises:
        RangeError: If an index is out of range
    """
    if n_k < 1:
        msg = f"Number of kernels must be >= 1, got {n_k}"
        raise RangeError(msg)
    if not 1 <= j <= n_k:
        msg = f"Kernel index {j} outside 1..{n_k}"
        raise RangeError(msg)
    if i < 1 or (n_t is not None and i > n_t):
        upper = n_t if n_t is not None else "N_T"
        msg = f"Tensor index {i} outside 1..{upper}"
        raise RangeError(msg)
    return j + (i - 1) * n_k


def synthesize_pair(
    tensor: SpectrumTensor | Node,
    kernel: SeparableKernel,
    mask: np.ndarray | None = None,
) -> Node:
    """Apply the four mode products of ``kernel`` to ``tensor``.

    Args:
        tensor: Spectrum tensor (or its values) of shape ``(t1, t2, t3, t4)``
        kernel: Separable kernel with matching input extents
        mask: Optional constant multiplied into the coefficients first

    Returns:
        Node of shape ``(u1, u2, u3, u4)``

    Raises:
        DimensionError: Naming the first mode whose extents disagree
    """
    values = tensor.values if isinstance(tensor, SpectrumTensor) else tensor
    if values.ndim != 4:
        msg = f"Spectrum tensor must have 4 modes, got shape {values.shape}"
        raise DimensionError(msg)
    for factor in kernel.factors:
        if values.shape[factor.mode - 1] != factor.in_extent:
            msg = (
                f"Extent mismatch at mode {factor.mode}: tensor has {values.shape[factor.mode - 1]}, "
                f"kernel {kernel.kernel_id} expects {factor.in_extent}"
            )
            raise DimensionError(msg)
    out = values if mask is None else ops.mul(values, mask)
    for factor in kernel.factors:
        out = ops.mode_product(out, factor.values, factor.mode - 1)
    return out


def all_pairs(state: DistillState) -> list[tuple[int, int]]:
    """Every 1-based (i, j) in pair-index order."""
    return [(i, j) for i in range(1, state.n_tensors + 1) for j in range(1, state.n_kernels + 1)]


def synthesize_dataset(
    state: DistillState,
    selection: Sequence[tuple[int, int]] | None = None,
    mask: np.ndarray | None = None,
) -> tuple[Node, np.ndarray]:
    """Decode the selected pairs into one image batch.

    Images are ordered by pair index, then by mode-1 slot.

    Args:
        state: Distillation state
        selection: 1-based (tensor, kernel) pairs; all pairs by default
        mask: Optional constant coefficient mask shaped like a spectrum tensor

    Returns:
        ``(images, labels)`` with images of shape ``(P * u1, u2, u3, u4)``

    Raises:
        RangeError: On an empty selection or an out-of-range pair
    """
    pairs = all_pairs(state) if selection is None else list(selection)
    if not pairs:
        msg = "Pair selection is empty"
        raise RangeError(msg)
    indexed = sorted((pair_index(i, j, state.n_kernels, state.n_tensors), i, j) for i, j in pairs)
    labels_by_pair = state.pair_labels()
    blocks = [synthesize_pair(state.tensors[i - 1], state.kernels[j - 1], mask) for _, i, j in indexed]
    per_pair = state.images_per_pair
    labels = np.repeat(np.array([labels_by_pair[p - 1] for p, _, _ in indexed], dtype=np.int64), per_pair)
    images = blocks[0] if len(blocks) == 1 else ops.concat(blocks)
    return images, labels


def compose_full_kernel(kernel: SeparableKernel, cap: int = ORACLE_CAP) -> np.ndarray:
    """Dense 8-mode kernel ``K[a,b,c,d,p,q,r,s] = k1[a,p] k2[b,q] k3[c,r] k4[d,s]``.

    Verification oracle only.

    Raises:
        OracleCapError: If the dense tensor would exceed ``cap`` entries
    """
    size = int(np.prod(kernel.in_extents, dtype=np.int64) * np.prod(kernel.out_extents, dtype=np.int64))
    if size > cap:
        msg = f"Composed kernel would hold {size} entries, above the oracle cap of {cap}"
        raise OracleCapError(msg)
    k1, k2, k3, k4 = (f.values.value for f in kernel.factors)
    return np.einsum("ap,bq,cr,ds->abcdpqrs", k1, k2, k3, k4)


def contract_full_kernel(values: np.ndarray, full: np.ndarray) -> np.ndarray:
    """Apply a dense 8-mode kernel to a spectrum tensor."""
    return np.tensordot(values, full, axes=([0, 1, 2, 3], [0, 1, 2, 3]))
