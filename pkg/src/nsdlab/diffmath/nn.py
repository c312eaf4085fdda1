"""Network layers composed from the primitive operations."""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from nsdlab.core.exceptions import DataError, DimensionError

from . import ops
from .graph import DTYPE, Node, as_node


@lru_cache(maxsize=64)
def _conv_index(batch: int, channels: int, height: int, width: int) -> np.ndarray:
    """Flat gather index for 3x3, stride 1, pad 1 patches.

    Shape ``(batch, height, width, channels, 3, 3)``; out-of-image taps point
    at the zero sentinel ``batch*channels*height*width``.
    """
    b = np.arange(batch).reshape(batch, 1, 1, 1, 1, 1)
    y = np.arange(height).reshape(1, height, 1, 1, 1, 1)
    x = np.arange(width).reshape(1, 1, width, 1, 1, 1)
    c = np.arange(channels).reshape(1, 1, 1, channels, 1, 1)
    dy = np.arange(3).reshape(1, 1, 1, 1, 3, 1) - 1
    dx = np.arange(3).reshape(1, 1, 1, 1, 1, 3) - 1
    yy, xx = y + dy, x + dx
    inside = (yy >= 0) & (yy < height) & (xx >= 0) & (xx < width)
    flat = ((b * channels + c) * height + np.clip(yy, 0, height - 1)) * width + np.clip(
        xx, 0, width - 1
    )
    sentinel = batch * channels * height * width
    index = np.where(inside, flat, sentinel).astype(np.int64)
    index.flags.writeable = False
    return index


def conv2d(x: Node, weight: Node, bias: Node | None = None) -> Node:
    """3x3 convolution, stride 1, zero padding 1.

    Args:
        x: Input ``(B, C, H, W)``
        weight: Filters ``(F, C, 3, 3)``
        bias: Optional ``(F,)``

    Returns:
        Output ``(B, F, H, W)``
    """
    x, weight = as_node(x), as_node(weight)
    if x.ndim != 4 or weight.ndim != 4 or weight.shape[1:] != (x.shape[1], 3, 3):
        msg = f"conv2d expects (B,C,H,W) and (F,C,3,3), got {x.shape} and {weight.shape}"
        raise DimensionError(msg)
    batch, channels, height, width = x.shape
    filters = weight.shape[0]
    patches = ops.gather(x, _conv_index(batch, channels, height, width))
    columns = ops.reshape(patches, (batch * height * width, channels * 9))
    kernel = ops.reshape(weight, (filters, channels * 9))
    out = ops.matmul(columns, ops.transpose(kernel))
    out = ops.transpose(ops.reshape(out, (batch, height, width, filters)), (0, 3, 1, 2))
    if bias is not None:
        out = ops.add(out, ops.reshape(as_node(bias), (1, filters, 1, 1)))
    return out


def instance_norm(x: Node, gamma: Node, beta: Node, eps: float = 1e-5) -> Node:
    """Per-sample, per-channel standardization with affine ``(C,)`` parameters."""
    x = as_node(x)
    channels = x.shape[1]
    mu = ops.mean(x, axis=(2, 3), keepdims=True)
    centered = ops.sub(x, mu)
    var = ops.mean(ops.mul(centered, centered), axis=(2, 3), keepdims=True)
    normalized = ops.mul(centered, ops.power(ops.add(var, eps), -0.5))
    scale = ops.reshape(as_node(gamma), (1, channels, 1, 1))
    shift = ops.reshape(as_node(beta), (1, channels, 1, 1))
    return ops.add(ops.mul(normalized, scale), shift)


def avg_pool2x2(x: Node) -> Node:
    """2x2 average pooling with stride 2."""
    x = as_node(x)
    batch, channels, height, width = x.shape
    if height % 2 or width % 2:
        msg = f"avg_pool2x2 needs even spatial extents, got {height}x{width}"
        raise DimensionError(msg)
    blocks = ops.reshape(x, (batch, channels, height // 2, 2, width // 2, 2))
    return ops.mean(blocks, axis=(3, 5))


def linear(x: Node, weight: Node, bias: Node | None = None) -> Node:
    """``x @ weight + bias`` with ``weight`` shaped ``(in, out)``."""
    out = ops.matmul(as_node(x), as_node(weight))
    if bias is not None:
        out = ops.add(out, as_node(bias))
    return out


def one_hot(labels: np.ndarray, num_classes: int) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size and (labels.min() < 0 or labels.max() >= num_classes):
        msg = f"Labels must lie in [0, {num_classes}), got range [{labels.min()}, {labels.max()}]"
        raise DataError(msg)
    encoded = np.zeros((labels.shape[0], num_classes), dtype=DTYPE)
    encoded[np.arange(labels.shape[0]), labels] = 1.0
    return encoded


def log_softmax(logits: Node) -> Node:
    logits = as_node(logits)
    # The shift is a constant: log-softmax does not depend on it.
    shift = Node.constant(logits.value.max(axis=1, keepdims=True))
    z = ops.sub(logits, shift)
    return ops.sub(z, ops.log(ops.sum(ops.exp(z), axis=1, keepdims=True)))


def softmax_cross_entropy(logits: Node, labels: np.ndarray) -> Node:
    """Mean cross-entropy of integer labels under softmax(logits).

    Raises:
        DataError: If a label is outside ``[0, num_classes)``
    """
    logits = as_node(logits)
    targets = Node.constant(one_hot(labels, logits.shape[1]))
    picked = ops.sum(ops.mul(log_softmax(logits), targets))
    return ops.mul(picked, -1.0 / logits.shape[0])
