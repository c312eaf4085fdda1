"""Pytest configuration and fixtures."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from nsdlab.core.types import LabelRule, ModelFamily, ModelSpec, TrainConfig, TransformKind
from nsdlab.decomposition import DistillState, SpectrumTensor, spectrum_name
from nsdlab.diffmath import Node
from nsdlab.transforms import make_kernel_factors


# autouse fixtures reset per test, not per example
settings.register_profile("nsdlab", suppress_health_check=[HealthCheck.function_scoped_fixture], deadline=None)
settings.load_profile("nsdlab")


@pytest.fixture(autouse=True)
def reset_registry():
    """Reset the format registry before each test to avoid singleton state issues."""
    from nsdlab.core.registry import registry

    registry.clear()

    from nsdlab.formats import register_default_formats

    register_default_formats()

    yield

    registry.clear()


@pytest.fixture(autouse=True)
def single_thread(monkeypatch):
    """Keep thread pools inline unless a test asks otherwise."""
    monkeypatch.setenv("NSD_THREADS", "1")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_blobs():
    """40 two-class 4x4 grayscale images."""
    from nsdlab.datasets import make_blobs

    return make_blobs(classes=2, samples=40, image_size=4, channels=1, noise=0.1, seed=7)


@pytest.fixture
def mlp_spec():
    return ModelSpec(family=ModelFamily.MLP, depth=1, width=4, input_shape=(1, 4, 4), num_classes=2)


@pytest.fixture
def conv_spec():
    return ModelSpec(family=ModelFamily.CONVNET, depth=1, width=3, input_shape=(1, 4, 4), num_classes=2)


@pytest.fixture
def fast_train():
    return TrainConfig(epochs=3, batch_size=8, lr=0.05, momentum=0.9, weight_decay=0.0)


def build_state(
    tensor_dims=(1, 1, 2, 2),
    out_extents=(2, 1, 4, 4),
    n_tensors=2,
    n_kernels=1,
    kind=TransformKind.RANDOM,
    num_classes=2,
    seed=0,
    label_rule=LabelRule.PER_CLASS_TENSORS,
    band_probs=None,
) -> DistillState:
    """Small random state for tests."""
    gen = np.random.default_rng(seed)
    tensors = tuple(
        SpectrumTensor(
            values=Node.leaf(gen.normal(size=tensor_dims), trainable=True, name=spectrum_name(i)),
            class_id=(i * num_classes) // n_tensors,
            index=i,
        )
        for i in range(n_tensors)
    )
    kernels = tuple(
        make_kernel_factors(kind, tensor_dims, out_extents, rng=gen, kernel_id=j) for j in range(n_kernels)
    )
    return DistillState(
        tensors=tensors,
        kernels=kernels,
        num_classes=num_classes,
        label_rule=label_rule,
        band_probs=band_probs,
    )


@pytest.fixture
def state_factory():
    return build_state


@pytest.fixture
def small_state():
    return build_state()


@pytest.fixture
def expert_bank(tiny_blobs, mlp_spec, fast_train):
    """One three-epoch MLP expert with four snapshots."""
    from nsdlab.matching import ExpertBank, train_expert

    trajectory = train_expert(tiny_blobs, mlp_spec, fast_train, snapshot_stride=1, seed=0)
    return ExpertBank((trajectory,), "blobs-fingerprint")


TINY_OVERRIDES = (
    "dataset.samples=40",
    "dataset.image_size=4",
    "budget.ipc=2",
    "model.family=mlp",
    "model.depth=1",
    "model.width=4",
    "expert.trajectories=1",
    "expert.epochs=2",
    "expert.batch_size=8",
    "distill.inner_steps=2",
    "distill.expert_span=1",
    "distill.iterations=2",
    "distill.batch_size=4",
    "distill.log_every=1",
    "distill.checkpoint_every=1",
    "eval.repeats=2",
    "eval.epochs=2",
    "eval.batch_size=8",
)


@pytest.fixture
def tiny_overrides(tmp_path):
    """Overrides for a run that finishes in well under a second per stage."""
    return [*TINY_OVERRIDES, f"output_dir={tmp_path / 'run'}"]


@pytest.fixture
def tiny_context(tiny_overrides):
    from nsdlab.core.config import load_config
    from nsdlab.pipeline import prepare

    return prepare(load_config(overrides=tiny_overrides))
