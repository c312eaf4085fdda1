"""Differentiating through unrolled inner SGD.

The student update ``theta <- theta - lr * grad`` is recorded on the tape
with ``create_graph=True`` at every inner step, so the final student
parameters remain a differentiable function of the synthetic batches and,
through them, of the spectrum tensors and kernel factors. The whole tape is
kept (no checkpointing).
"""

from __future__ import annotations

from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass

import numpy as np

from nsdlab.core.exceptions import ContractViolationError

from . import ops
from .graph import Node, backward, grad


@dataclass(frozen=True)
class InnerBatch:
    """One synthetic mini-batch for an inner step."""

    images: Node
    labels: np.ndarray


StudentLoss = Callable[[Node, InnerBatch], Node]


@dataclass(frozen=True)
class UnrollGradients:
    """Outcome of :func:`unrolled_sgd_gradients`.

    Attributes:
        gradients: Leaf -> d(outer loss)/d(leaf)
        final_params: Value of the student parameters after the last step
        outer_value: Value of the outer loss
    """

    gradients: dict[Node, np.ndarray]
    final_params: np.ndarray
    outer_value: float


def _check_batches(inner_batches: Sequence[InnerBatch], steps: int) -> None:
    if steps < 1:
        msg = f"Unroll needs at least one step, got {steps}"
        raise ContractViolationError(msg)
    if len(inner_batches) < steps:
        msg = f"Unroll of {steps} steps received only {len(inner_batches)} batches"
        raise ContractViolationError(msg)
    for index, batch in enumerate(inner_batches[:steps]):
        if not batch.images.requires_grad:
            msg = (
                f"Inner batch {index} is detached from the distillation parameters; "
                "synthesize it from live spectrum/kernel nodes"
            )
            raise ContractViolationError(msg)


def unroll_sgd(
    loss_fn: StudentLoss,
    init_params: Node | np.ndarray,
    inner_batches: Sequence[InnerBatch],
    steps: int,
    lr: float,
    momentum: float = 0.0,
) -> Node:
    """Run ``steps`` recorded SGD updates and return the final parameters.

    Args:
        loss_fn: Builds the student loss from (flat params, batch)
        init_params: Starting flat parameter vector (expert snapshot)
        inner_batches: One batch per step, each connected to trainable leaves
        steps: Number of inner steps N
        lr: Inner learning rate
        momentum: Inner momentum (0 means vanilla SGD)

    Returns:
        Flat parameter node after N steps, connected to the batches

    Raises:
        ContractViolationError: On ``steps < 1`` or a detached batch
    """
    _check_batches(inner_batches, steps)
    if isinstance(init_params, Node) and init_params.requires_grad:
        theta = init_params
    else:
        raw = init_params.value if isinstance(init_params, Node) else init_params
        theta = Node.leaf(raw, trainable=True, name="theta")

    velocity: Node | None = None
    for step in range(steps):
        loss = loss_fn(theta, inner_batches[step])
        (direction,) = grad(loss, [theta], create_graph=True)
        if direction is None:
            direction = Node.constant(np.zeros(theta.shape))
        if momentum:
            velocity = direction if velocity is None else ops.add(ops.mul(velocity, momentum), direction)
            direction = velocity
        theta = ops.sub(theta, ops.mul(direction, lr))
    return theta


def unrolled_sgd_gradients(
    loss_fn: StudentLoss,
    init_params: Node | np.ndarray,
    inner_batches: Sequence[InnerBatch],
    steps: int,
    lr: float,
    momentum: float = 0.0,
    *,
    outer_loss: Callable[[Node], Node],
    leaves: Iterable[Node],
) -> UnrollGradients:
    """Meta-gradients of an outer loss through N unrolled SGD steps.

    Args:
        loss_fn: Student loss builder
        init_params: Expert parameters the student starts from
        inner_batches: Synthetic batches (live nodes)
        steps: N
        lr: alpha
        momentum: Inner momentum
        outer_loss: Maps the final student parameters to a scalar
        leaves: Distillation leaves (spectrum tensors, kernel factors)

    Returns:
        UnrollGradients with the gradient map and the final student parameters
    """
    final = unroll_sgd(loss_fn, init_params, inner_batches, steps, lr, momentum)
    loss = outer_loss(final)
    gradients = backward(loss, list(leaves))
    return UnrollGradients(
        gradients=gradients,
        final_params=np.array(final.value),
        outer_value=loss.item(),
    )
