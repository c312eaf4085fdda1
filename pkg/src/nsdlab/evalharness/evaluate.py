"""Train fresh networks on condensed data and test them on held-out real data."""

from __future__ import annotations

import logging

import numpy as np

from nsdlab.core.exceptions import RangeError
from nsdlab.core.seeding import SeedStreams
from nsdlab.core.types import BudgetSpec, EvalReport, LabeledImages, ModelSpec, TrainConfig
from nsdlab.decomposition import DistillState
from nsdlab.matching import detached_images
from nsdlab.models import accuracy, build_model, sgd_train
from nsdlab.utils.concurrency import ordered_map

from .augment import flip_and_crop


logger = logging.getLogger(__name__)


def train_and_test(
    train: LabeledImages,
    test: LabeledImages,
    cfg: TrainConfig,
    spec: ModelSpec,
    rng: np.random.Generator,
) -> float:
    """Train one freshly initialized network and return its top-1 test accuracy."""
    params, model = build_model(spec, rng)
    result = sgd_train(model, params, train, cfg, rng, augment=flip_and_crop)
    return accuracy(model, result.params, test)


def evaluate_images(
    train: LabeledImages,
    test: LabeledImages,
    cfg: TrainConfig,
    spec: ModelSpec,
    *,
    repeats: int = 5,
    seed: int = 0,
    label: str = "",
    config_digest: str = "",
) -> EvalReport:
    """Repeat :func:`train_and_test` with the seeded streams ``("eval", r)``."""
    streams = SeedStreams(seed)
    accuracies = ordered_map(
        lambda r: train_and_test(train, test, cfg, spec, streams.generator("eval", r)),
        range(repeats),
    )
    report = EvalReport(accuracies, spec, config_digest=config_digest, label=label)
    logger.info("%s: %.4f +- %.4f over %d repeats", label or "eval", report.mean, report.std, repeats)
    return report


def evaluate_synthetic(
    state: DistillState,
    test_set: LabeledImages,
    train_cfg: TrainConfig,
    repeats: int = 5,
    *,
    spec: ModelSpec,
    seed: int = 0,
    label: str = "synthetic",
    config_digest: str = "",
) -> EvalReport:
    """Evaluate the images a state decodes to.

    The state is only read: images are synthesized without a tape and the
    spectrum tensors and kernels are never touched.
    """
    train = detached_images(state)
    report = evaluate_images(
        train,
        test_set,
        train_cfg,
        spec,
        repeats=repeats,
        seed=seed,
        label=label,
        config_digest=config_digest,
    )
    report.metadata["images"] = len(train)
    return report


def sample_subset(real_train: LabeledImages, budget: BudgetSpec, rng: np.random.Generator) -> LabeledImages:
    """``ipc`` uniformly chosen real images per class, kept in dataset order.

    Raises:
        RangeError: If the budget asks for more images than the data holds
    """
    wanted = budget.ipc * budget.num_classes
    if wanted > len(real_train):
        msg = f"Budget of {wanted} images exceeds the {len(real_train)} training images"
        raise RangeError(msg)
    picks: list[np.ndarray] = []
    for c in range(budget.num_classes):
        pool = np.flatnonzero(real_train.labels == c)
        if pool.size < budget.ipc:
            msg = f"Class {c} has {pool.size} images, budget asks for {budget.ipc}"
            raise RangeError(msg)
        picks.append(rng.choice(pool, size=budget.ipc, replace=False))
    return real_train.subset(np.sort(np.concatenate(picks)))


def random_subset_baseline(
    real_train: LabeledImages,
    budget: BudgetSpec,
    repeats: int = 5,
    *,
    test_set: LabeledImages,
    train_cfg: TrainConfig,
    spec: ModelSpec,
    seed: int = 0,
    config_digest: str = "",
) -> EvalReport:
    """Control arm: train on a random real subset of the same size as the budget.

    Each repeat draws its own subset from the stream ``("subset", r)``.
    """
    streams = SeedStreams(seed)

    def run(r: int) -> float:
        subset = sample_subset(real_train, budget, streams.generator("subset", r))
        return train_and_test(subset, test_set, train_cfg, spec, streams.generator("eval", r))

    accuracies = ordered_map(run, range(repeats))
    report = EvalReport(accuracies, spec, config_digest=config_digest, label="random")
    report.metadata["images"] = budget.ipc * budget.num_classes
    logger.info("random subset: %.4f +- %.4f over %d repeats", report.mean, report.std, repeats)
    return report
