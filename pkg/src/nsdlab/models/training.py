"""Plain mini-batch SGD over flat parameters (experts and evaluation models)."""

from __future__ import annotations

import logging
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np

from nsdlab.core.types import LabeledImages, TrainConfig
from nsdlab.diffmath import backward, no_grad

from .networks import Model
from .params import ParamVector


logger = logging.getLogger(__name__)

Augment = Callable[[np.ndarray, np.random.Generator], np.ndarray]

EVAL_BATCH = 256


@dataclass
class TrainResult:
    """Final parameters, optional snapshots and per-epoch mean loss."""

    params: ParamVector
    snapshots: list[ParamVector] = field(default_factory=list)
    losses: list[float] = field(default_factory=list)


def sgd_step(
    model: Model,
    values: np.ndarray,
    velocity: np.ndarray,
    images: np.ndarray,
    labels: np.ndarray,
    cfg: TrainConfig,
) -> tuple[np.ndarray, np.ndarray, float]:
    """One momentum-SGD update with L2 weight decay added to the gradient."""
    theta = ParamVector(values, model.layout).as_node(trainable=True)
    loss = model.loss(theta, images, labels)
    gradient = backward(loss, [theta])[theta]
    if cfg.weight_decay:
        gradient = gradient + cfg.weight_decay * values
    velocity = cfg.momentum * velocity + gradient
    return values - cfg.lr * velocity, velocity, loss.item()


def sgd_train(
    model: Model,
    init: ParamVector,
    data: LabeledImages,
    cfg: TrainConfig,
    rng: np.random.Generator,
    *,
    snapshot_stride: int | None = None,
    augment: Augment | None = None,
) -> TrainResult:
    """Train for ``cfg.epochs`` epochs with reshuffled mini-batches.

    Args:
        model: Forward function
        init: Starting parameters
        data: Training images and labels
        cfg: Optimizer settings
        rng: Generator for shuffling and augmentation
        snapshot_stride: Record parameters every this many epochs, including epoch 0
        augment: Optional batch transform applied when ``cfg.augment`` is set

    Returns:
        TrainResult
    """
    values = np.array(init.values)
    velocity = np.zeros_like(values)
    result = TrainResult(params=init)
    if snapshot_stride:
        result.snapshots.append(init)
    n = len(data)
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, cfg.batch_size):
            index = order[start : start + cfg.batch_size]
            images = data.images[index]
            if cfg.augment and augment is not None:
                images = augment(images, rng)
            values, velocity, loss = sgd_step(model, values, velocity, images, data.labels[index], cfg)
            epoch_loss += loss * index.size
        result.losses.append(epoch_loss / n)
        if snapshot_stride and epoch % snapshot_stride == 0:
            result.snapshots.append(init.with_values(values))
        logger.debug("epoch %d/%d loss %.4f", epoch, cfg.epochs, epoch_loss / n)
    result.params = init.with_values(values)
    return result


def accuracy(model: Model, params: ParamVector, data: LabeledImages) -> float:
    """Top-1 accuracy on ``data``."""
    correct = 0
    with no_grad():
        for start in range(0, len(data), EVAL_BATCH):
            images = data.images[start : start + EVAL_BATCH]
            correct += int(np.sum(model.predict(params, images) == data.labels[start : start + EVAL_BATCH]))
    return correct / len(data)
