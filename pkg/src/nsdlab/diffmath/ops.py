"""Primitive differentiable operations.

Each VJP is expressed with the operations of this module, so the set is
closed under differentiation: the adjoint of ``gather`` is ``scatter`` and
vice versa, ``broadcast_to`` pairs with ``sum_to``, ``slice_rows`` with
``pad_rows`` and ``take_rows`` with ``scatter_rows``.
"""

from __future__ import annotations

from collections.abc import Sequence
from typing import TYPE_CHECKING

import numpy as np

from nsdlab.core.exceptions import DimensionError

from .graph import DTYPE, Node, as_node, make_node


if TYPE_CHECKING:
    from numpy.typing import ArrayLike

Operand = Node | float | int | np.ndarray


# --- shape plumbing -------------------------------------------------------


def sum_to(x: Node, shape: tuple[int, ...]) -> Node:
    """Sum a broadcast result back down to ``shape``."""
    shape = tuple(shape)
    if x.shape == shape:
        return x
    lead = x.ndim - len(shape)
    axes = tuple(range(lead)) + tuple(
        lead + i for i, extent in enumerate(shape) if extent == 1 and x.shape[lead + i] != 1
    )
    value = x.value.sum(axis=axes, keepdims=True)
    if lead:
        value = value.reshape(value.shape[lead:])
    value = value.reshape(shape)
    source = x.shape
    return make_node(value, (x,), lambda g: (broadcast_to(g, source),), "sum_to")


def broadcast_to(x: Node, shape: tuple[int, ...]) -> Node:
    shape = tuple(shape)
    if x.shape == shape:
        return x
    source = x.shape
    value = np.broadcast_to(x.value, shape)
    return make_node(value, (x,), lambda g: (sum_to(g, source),), "broadcast_to")


def reshape(x: Node, shape: Sequence[int]) -> Node:
    source = x.shape
    value = x.value.reshape(tuple(shape))
    return make_node(value, (x,), lambda g: (reshape(g, source),), "reshape")


def transpose(x: Node, axes: Sequence[int] | None = None) -> Node:
    order = tuple(axes) if axes is not None else tuple(reversed(range(x.ndim)))
    inverse = tuple(int(i) for i in np.argsort(order))
    value = np.transpose(x.value, order)
    return make_node(value, (x,), lambda g: (transpose(g, inverse),), "transpose")


# --- elementwise ----------------------------------------------------------


def add(a: Operand, b: Operand) -> Node:
    a, b = as_node(a), as_node(b)
    sa, sb = a.shape, b.shape
    return make_node(
        a.value + b.value,
        (a, b),
        lambda g: (sum_to(g, sa), sum_to(g, sb)),
        "add",
    )


def neg(a: Operand) -> Node:
    a = as_node(a)
    return make_node(-a.value, (a,), lambda g: (neg(g),), "neg")


def sub(a: Operand, b: Operand) -> Node:
    a, b = as_node(a), as_node(b)
    sa, sb = a.shape, b.shape
    return make_node(
        a.value - b.value,
        (a, b),
        lambda g: (sum_to(g, sa), sum_to(neg(g), sb)),
        "sub",
    )


def mul(a: Operand, b: Operand) -> Node:
    a, b = as_node(a), as_node(b)
    return make_node(
        a.value * b.value,
        (a, b),
        lambda g: (
            sum_to(mul(g, b), a.shape) if a.requires_grad else None,
            sum_to(mul(g, a), b.shape) if b.requires_grad else None,
        ),
        "mul",
    )


def power(a: Operand, exponent: float) -> Node:
    a = as_node(a)
    p = float(exponent)
    return make_node(
        np.power(a.value, p),
        (a,),
        lambda g: (mul(g, mul(power(a, p - 1.0), p)),),
        "power",
    )


def div(a: Operand, b: Operand) -> Node:
    return mul(a, power(b, -1.0))


def exp(a: Operand) -> Node:
    a = as_node(a)
    value = np.exp(a.value)

    def vjp(g: Node) -> tuple[Node]:
        return (mul(g, out),)

    out = make_node(value, (a,), vjp, "exp")
    return out


def log(a: Operand) -> Node:
    a = as_node(a)
    return make_node(np.log(a.value), (a,), lambda g: (div(g, a),), "log")


def relu(a: Operand) -> Node:
    a = as_node(a)
    mask = Node.constant((a.value > 0).astype(DTYPE))
    return make_node(a.value * mask.value, (a,), lambda g: (mul(g, mask),), "relu")


def square(a: Operand) -> Node:
    a = as_node(a)
    return mul(a, a)


# --- reductions -----------------------------------------------------------


def _normalize_axes(axis: int | Sequence[int] | None, ndim: int) -> tuple[int, ...]:
    if axis is None:
        return tuple(range(ndim))
    if isinstance(axis, int):
        axis = (axis,)
    return tuple(sorted(a % ndim for a in axis))


def sum(x: Operand, axis: int | Sequence[int] | None = None, keepdims: bool = False) -> Node:  # noqa: A001
    x = as_node(x)
    axes = _normalize_axes(axis, x.ndim)
    source = x.shape
    kept_shape = tuple(1 if i in axes else extent for i, extent in enumerate(source))
    value = x.value.sum(axis=axes, keepdims=keepdims)
    return make_node(
        value,
        (x,),
        lambda g: (broadcast_to(reshape(g, kept_shape), source),),
        "sum",
    )


def mean(x: Operand, axis: int | Sequence[int] | None = None, keepdims: bool = False) -> Node:
    x = as_node(x)
    axes = _normalize_axes(axis, x.ndim)
    count = int(np.prod([x.shape[a] for a in axes])) if axes else 1
    return mul(sum(x, axes, keepdims=keepdims), 1.0 / count)


def squared_distance(a: Operand, b: Operand) -> Node:
    """Squared L2 distance ``sum((a - b)**2)``."""
    diff = sub(a, b)
    return sum(mul(diff, diff))


# --- linear algebra -------------------------------------------------------


def matmul(a: Operand, b: Operand) -> Node:
    """Matrix product of two 2-D nodes."""
    a, b = as_node(a), as_node(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        msg = f"matmul needs (m,k)@(k,n), got {a.shape} and {b.shape}"
        raise DimensionError(msg)
    return make_node(
        a.value @ b.value,
        (a, b),
        lambda g: (
            matmul(g, transpose(b)) if a.requires_grad else None,
            matmul(transpose(a), g) if b.requires_grad else None,
        ),
        "matmul",
    )


def mode_product(t: Operand, k: Operand, mode: int) -> Node:
    """Contract mode ``mode`` of ``t`` against the rows of ``k``.

    ``result[..., j, ...] = sum_i t[..., i, ...] * k[i, j]``

    Args:
        t: Tensor of any rank
        k: Factor of shape ``(t.shape[mode], u)``
        mode: 0-based mode index

    Returns:
        Tensor with extent ``u`` at ``mode``

    Raises:
        DimensionError: If the extents disagree
    """
    t, k = as_node(t), as_node(k)
    if not 0 <= mode < t.ndim:
        msg = f"mode {mode} out of range for a rank-{t.ndim} tensor"
        raise DimensionError(msg)
    if k.ndim != 2 or k.shape[0] != t.shape[mode]:
        msg = (
            f"mode_product mismatch at mode {mode}: tensor extent {t.shape[mode]} "
            f"vs factor rows {k.shape[0] if k.ndim == 2 else k.shape}"
        )
        raise DimensionError(msg)
    order = [i for i in range(t.ndim) if i != mode] + [mode]
    moved = transpose(t, order)
    rest = moved.shape[:-1]
    flat = reshape(moved, (int(np.prod(rest, dtype=np.int64)), t.shape[mode]))
    out = reshape(matmul(flat, k), (*rest, k.shape[1]))
    back = list(range(t.ndim - 1))
    back.insert(mode, t.ndim - 1)
    return transpose(out, back)


# --- indexing -------------------------------------------------------------


def gather(x: Operand, index: np.ndarray) -> Node:
    """Read ``x.ravel()[index]``; the index ``x.size`` reads a zero."""
    x = as_node(x)
    index = np.asarray(index, dtype=np.int64)
    source = x.shape
    padded = np.concatenate([x.value.reshape(-1), np.zeros(1, dtype=DTYPE)])
    return make_node(padded[index], (x,), lambda g: (scatter(g, index, source),), "gather")


def scatter(x: Operand, index: np.ndarray, shape: tuple[int, ...]) -> Node:
    """Adjoint of :func:`gather`: sum ``x`` into a zero array of ``shape``."""
    x = as_node(x)
    size = int(np.prod(shape, dtype=np.int64))
    flat = np.bincount(index.reshape(-1), weights=x.value.reshape(-1), minlength=size + 1)
    value = flat[:size].reshape(shape)
    return make_node(value, (x,), lambda g: (gather(g, index),), "scatter")


def take_rows(x: Operand, rows: ArrayLike) -> Node:
    """Select rows along axis 0 (repeats allowed)."""
    x = as_node(x)
    rows = np.asarray(rows, dtype=np.int64)
    total = x.shape[0]
    return make_node(x.value[rows], (x,), lambda g: (scatter_rows(g, rows, total),), "take_rows")


def scatter_rows(x: Operand, rows: np.ndarray, total: int) -> Node:
    x = as_node(x)
    value = np.zeros((total, *x.shape[1:]), dtype=DTYPE)
    np.add.at(value, rows, x.value)
    return make_node(value, (x,), lambda g: (take_rows(g, rows),), "scatter_rows")


def slice_rows(x: Operand, start: int, stop: int) -> Node:
    x = as_node(x)
    total = x.shape[0]
    return make_node(
        x.value[start:stop], (x,), lambda g: (pad_rows(g, start, total),), "slice_rows"
    )


def pad_rows(x: Operand, start: int, total: int) -> Node:
    x = as_node(x)
    stop = start + x.shape[0]
    value = np.zeros((total, *x.shape[1:]), dtype=DTYPE)
    value[start:stop] = x.value
    return make_node(value, (x,), lambda g: (slice_rows(g, start, stop),), "pad_rows")


def concat(parts: Sequence[Node]) -> Node:
    """Concatenate along axis 0."""
    nodes = [as_node(p) for p in parts]
    if len(nodes) == 1:
        return nodes[0]
    bounds = np.cumsum([0] + [n.shape[0] for n in nodes])
    value = np.concatenate([n.value for n in nodes], axis=0)

    def vjp(g: Node) -> list[Node]:
        return [slice_rows(g, int(bounds[i]), int(bounds[i + 1])) for i in range(len(nodes))]

    return make_node(value, tuple(nodes), vjp, "concat")
