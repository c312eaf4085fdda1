"""Dense-tensor core with reverse-mode differentiation.

Higher-order use is supported: gradients built with ``create_graph=True`` are
ordinary graph nodes.
"""

from . import nn, ops
from .graph import DTYPE, Node, as_node, backward, grad, is_recording, no_grad, recording
from .oracle import finite_difference_oracle, relative_error
from .ops import mode_product
from .unroll import InnerBatch, UnrollGradients, unroll_sgd, unrolled_sgd_gradients


__all__ = [
    "DTYPE",
    "InnerBatch",
    "Node",
    "UnrollGradients",
    "as_node",
    "backward",
    "finite_difference_oracle",
    "grad",
    "is_recording",
    "mode_product",
    "nn",
    "no_grad",
    "ops",
    "recording",
    "relative_error",
    "unroll_sgd",
    "unrolled_sgd_gradients",
]
