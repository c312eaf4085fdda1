"""Graph nodes, tape control and reverse-mode differentiation.

A :class:`Node` wraps an immutable ``numpy.ndarray``. Operations in
:mod:`nsdlab.diffmath.ops` record parents and a vector-Jacobian product
(VJP) closure. VJPs are themselves written with recorded operations, so a
gradient computed with ``create_graph=True`` can be differentiated again.
That is what lets the distillation loop differentiate through unrolled SGD.
"""

from __future__ import annotations

import threading
from collections.abc import Callable, Iterable, Iterator, Sequence
from contextlib import contextmanager
from typing import TYPE_CHECKING, Any

import numpy as np

from nsdlab.core.exceptions import ContractViolationError


if TYPE_CHECKING:
    from numpy.typing import ArrayLike

DTYPE = np.float64

VJP = Callable[["Node"], Sequence["Node | None"]]

_tape = threading.local()


def is_recording() -> bool:
    """Return True when new operations are recorded on the tape."""
    return getattr(_tape, "enabled", True)


@contextmanager
def recording(enabled: bool) -> Iterator[None]:
    """Enable or disable tape recording for the current thread."""
    previous = is_recording()
    _tape.enabled = enabled
    try:
        yield
    finally:
        _tape.enabled = previous


def no_grad() -> Any:
    """Context manager that turns recording off (pure numeric evaluation)."""
    return recording(False)


class Node:
    """A value in the computation graph.

    Attributes:
        value: Read-only array holding the forward value
        op: Tag of the operation that produced this node
        parents: Input nodes of that operation
        requires_grad: Whether gradients flow into this node
        name: Optional label (used for leaves)
    """

    __slots__ = ("__weakref__", "_vjp", "name", "op", "parents", "requires_grad", "value")

    def __init__(
        self,
        value: ArrayLike,
        *,
        parents: tuple[Node, ...] = (),
        vjp: VJP | None = None,
        op: str = "leaf",
        requires_grad: bool = False,
        name: str | None = None,
        owned: bool = False,
    ) -> None:
        # Operation results arrive freshly allocated (or as views of frozen
        # arrays) and are adopted without a copy.
        array = np.asarray(value, dtype=DTYPE) if owned else np.array(value, dtype=DTYPE)
        array.flags.writeable = False
        self.value = array
        self.parents = parents
        self._vjp = vjp
        self.op = op
        self.requires_grad = requires_grad
        self.name = name

    @classmethod
    def leaf(cls, value: ArrayLike, *, trainable: bool = True, name: str | None = None) -> Node:
        """Create a leaf; trainable leaves receive gradients."""
        return cls(value, requires_grad=trainable, name=name)

    @classmethod
    def constant(cls, value: ArrayLike) -> Node:
        """Create a constant node (never differentiated)."""
        return cls(value, op="const")

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape

    @property
    def size(self) -> int:
        return int(self.value.size)

    @property
    def ndim(self) -> int:
        return self.value.ndim

    @property
    def is_leaf(self) -> bool:
        return self._vjp is None

    def detach(self) -> Node:
        """Return a constant with the same value."""
        return Node(self.value, op="const")

    def item(self) -> float:
        return float(self.value.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        return self.value

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        return f"Node(op={self.op!r}, shape={self.shape}{label}, requires_grad={self.requires_grad})"

    # Arithmetic sugar; implementations live in ops.
    def __add__(self, other: Any) -> Node:
        from nsdlab.diffmath import ops

        return ops.add(self, other)

    def __radd__(self, other: Any) -> Node:
        from nsdlab.diffmath import ops

        return ops.add(other, self)

    def __sub__(self, other: Any) -> Node:
        from nsdlab.diffmath import ops

        return ops.sub(self, other)

    def __rsub__(self, other: Any) -> Node:
        from nsdlab.diffmath import ops

        return ops.sub(other, self)

    def __mul__(self, other: Any) -> Node:
        from nsdlab.diffmath import ops

        return ops.mul(self, other)

    def __rmul__(self, other: Any) -> Node:
        from nsdlab.diffmath import ops

        return ops.mul(other, self)

    def __truediv__(self, other: Any) -> Node:
        from nsdlab.diffmath import ops

        return ops.div(self, other)

    def __neg__(self) -> Node:
        from nsdlab.diffmath import ops

        return ops.neg(self)

    def __pow__(self, exponent: float) -> Node:
        from nsdlab.diffmath import ops

        return ops.power(self, exponent)

    def __matmul__(self, other: Node) -> Node:
        from nsdlab.diffmath import ops

        return ops.matmul(self, other)


def as_node(value: Node | ArrayLike) -> Node:
    """Wrap plain values as constants; pass nodes through."""
    if isinstance(value, Node):
        return value
    return Node.constant(value)


def make_node(value: np.ndarray, parents: tuple[Node, ...], vjp: VJP, op: str) -> Node:
    """Create an operation result, recording it only when needed."""
    if is_recording() and any(p.requires_grad for p in parents):
        return Node(value, parents=parents, vjp=vjp, op=op, requires_grad=True, owned=True)
    return Node(value, op=op, owned=True)


def _topological_order(root: Node) -> list[Node]:
    """Nodes reachable from root that require grad, parents before children."""
    order: list[Node] = []
    visited: set[int] = set()
    stack: list[tuple[Node, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for parent in node.parents:
            if parent.requires_grad and id(parent) not in visited:
                stack.append((parent, False))
    return order


def grad(
    output: Node,
    inputs: Sequence[Node],
    *,
    create_graph: bool = False,
) -> list[Node | None]:
    """Gradients of a scalar output with respect to ``inputs``.

    Args:
        output: Scalar node
        inputs: Nodes to differentiate with respect to
        create_graph: Record the backward pass so the result is differentiable

    Returns:
        One gradient node per input, ``None`` where no path exists

    Raises:
        ContractViolationError: If output is not a scalar
    """
    if output.size != 1:
        msg = f"Gradient requires a scalar output, got shape {output.shape}"
        raise ContractViolationError(msg)

    wanted = {id(node) for node in inputs}
    if not output.requires_grad:
        return [None for _ in inputs]

    order = _topological_order(output)
    grads: dict[int, Node] = {id(output): Node.constant(np.ones_like(output.value))}
    kept: dict[int, Node] = {}

    with recording(create_graph):
        for node in reversed(order):
            upstream = grads.pop(id(node), None)
            if upstream is None:
                continue
            if id(node) in wanted:
                kept[id(node)] = upstream
            if node._vjp is None:
                continue
            parent_grads = node._vjp(upstream)
            for parent, parent_grad in zip(node.parents, parent_grads, strict=True):
                if parent_grad is None or not parent.requires_grad:
                    continue
                existing = grads.get(id(parent))
                grads[id(parent)] = parent_grad if existing is None else existing + parent_grad

    return [kept.get(id(node)) for node in inputs]


def trainable_leaves(output: Node) -> list[Node]:
    """Trainable leaves reachable from ``output``, in discovery order."""
    return [n for n in _topological_order(output) if n.is_leaf and n.requires_grad]


def backward(loss: Node, leaves: Iterable[Node] | None = None) -> dict[Node, np.ndarray]:
    """Compute ``dloss/dleaf`` for trainable leaves.

    Args:
        loss: Scalar loss node
        leaves: Leaves to report; defaults to every trainable leaf in the graph

    Returns:
        Mapping leaf -> gradient array. Leaves without a path get zeros.

    Raises:
        ContractViolationError: If loss is not a scalar
    """
    if loss.size != 1:
        msg = f"backward() needs a scalar loss, got shape {loss.shape}"
        raise ContractViolationError(msg)

    targets = list(leaves) if leaves is not None else trainable_leaves(loss)
    targets = [leaf for leaf in targets if leaf.requires_grad]
    results = grad(loss, targets, create_graph=False)
    return {
        leaf: (np.zeros_like(leaf.value) if g is None else np.array(g.value))
        for leaf, g in zip(targets, results, strict=True)
    }
