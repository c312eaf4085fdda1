"""Outer objectives: trajectory match, real-guided loss and the DM/DC baselines."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from nsdlab.core.exceptions import DegenerateSegmentError
from nsdlab.core.types import LabeledImages
from nsdlab.decomposition import DistillState, synthesize_dataset
from nsdlab.diffmath import Node, as_node, backward, grad, ops
from nsdlab.models import Model, ParamVector, build_model
from nsdlab.models.params import check_same_layout


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BaselineLoss:
    """Loss node plus the classes or layers that had to be skipped."""

    value: Node
    skipped: tuple[str, ...] = field(default_factory=tuple)


def _flat(params: ParamVector | Node) -> Node:
    return params.as_node() if isinstance(params, ParamVector) else params


def match_loss(
    student_final: ParamVector | Node,
    expert_start: ParamVector,
    expert_target: ParamVector,
    normalized: bool = True,
) -> Node:
    """``||student - target||^2``, optionally divided by ``||start - target||^2``.

    Raises:
        ContractViolationError: If the expert vectors use different layouts
        DegenerateSegmentError: If normalized and the expert segment has zero length
    """
    check_same_layout(expert_start, expert_target)
    if isinstance(student_final, ParamVector):
        check_same_layout(student_final, expert_target)
    distance = ops.squared_distance(_flat(student_final), expert_target.values)
    if not normalized:
        return distance
    diff = expert_start.values - expert_target.values
    denominator = float(diff @ diff)
    if denominator == 0.0:
        msg = "Expert segment has zero length; the normalized match loss is undefined"
        raise DegenerateSegmentError(msg)
    return ops.mul(distance, 1.0 / denominator)


def real_guided_loss(model: Model, student_final: ParamVector | Node, real_batch: LabeledImages) -> Node:
    """Cross-entropy of the student's final parameters on real images."""
    return model.loss(_flat(student_final), real_batch.images, real_batch.labels)


def distribution_matching_loss(
    images: Node,
    labels: np.ndarray,
    real_batch: LabeledImages,
    model: Model,
    params: ParamVector,
) -> BaselineLoss:
    """Sum over classes of ``||mean embed(synthetic_c) - mean embed(real_c)||^2``.

    Classes missing from the real batch are skipped (and reported).
    """
    total: Node | None = None
    skipped: list[str] = []
    for c in np.unique(labels):
        real_rows = np.flatnonzero(real_batch.labels == c)
        if real_rows.size == 0:
            logger.warning("DM loss: class %d absent from the real batch, skipped", c)
            skipped.append(f"class{c}")
            continue
        syn_rows = np.flatnonzero(labels == c)
        syn_mean = ops.mean(model.embed(params, ops.take_rows(images, syn_rows)), axis=0)
        with_real = model.embed(params, real_batch.images[real_rows]).value.mean(axis=0)
        term = ops.squared_distance(syn_mean, with_real)
        total = term if total is None else ops.add(total, term)
    if total is None:
        total = ops.mul(ops.sum(images), 0.0)
    return BaselineLoss(total, tuple(skipped))


def dm_loss(
    state: DistillState,
    real_batch: LabeledImages,
    embed_seed: int,
    model: Model,
    mask: np.ndarray | None = None,
) -> BaselineLoss:
    """Distribution matching with a freshly initialized, frozen embedding network."""
    params, _ = build_model(model.spec, embed_seed)
    images, labels = synthesize_dataset(state, mask=mask)
    return distribution_matching_loss(images, labels, real_batch, model, params)


def gradient_matching_loss(
    images: Node,
    labels: np.ndarray,
    real_batch: LabeledImages,
    model: Model,
    params: ParamVector,
) -> BaselineLoss:
    """Per-layer cosine distance ``1 - cos(g_real, g_syn)`` summed over layers.

    Layers where either gradient is zero contribute 0 and are reported.
    """
    theta = params.as_node(trainable=True)
    real_grad = backward(model.loss(theta, real_batch.images, real_batch.labels), [theta])[theta]
    (syn_grad,) = grad(model.loss(theta, images, labels), [theta], create_graph=True)
    if syn_grad is None:
        syn_grad = Node.constant(np.zeros(theta.shape))
    total: Node | None = None
    skipped: list[str] = []
    for entry in params.layout.entries:
        stop = entry.offset + entry.size
        g_real = real_grad[entry.offset : stop]
        g_syn = ops.slice_rows(syn_grad, entry.offset, stop)
        real_norm = float(np.linalg.norm(g_real))
        syn_sq = ops.sum(ops.mul(g_syn, g_syn))
        if real_norm == 0.0 or syn_sq.item() == 0.0:
            logger.warning("DC loss: zero gradient in layer %s, skipped", entry.name)
            skipped.append(entry.name)
            continue
        cosine = ops.mul(ops.sum(ops.mul(g_syn, g_real)), ops.power(syn_sq, -0.5))
        term = ops.sub(1.0, ops.mul(cosine, 1.0 / real_norm))
        total = term if total is None else ops.add(total, term)
    if total is None:
        total = ops.mul(ops.sum(as_node(images)), 0.0)
    return BaselineLoss(total, tuple(skipped))


def dc_loss(
    state: DistillState,
    real_batch: LabeledImages,
    params: ParamVector,
    model: Model,
    mask: np.ndarray | None = None,
) -> BaselineLoss:
    """Gradient matching between real and synthesized batches at ``params``."""
    images, labels = synthesize_dataset(state, mask=mask)
    return gradient_matching_loss(images, labels, real_batch, model, params)
