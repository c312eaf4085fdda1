"""Tests for the evaluation protocol and augmentation."""

import numpy as np
import pytest

from nsdlab.core.exceptions import ConfigError, RangeError
from nsdlab.core.types import BudgetSpec, ModelFamily, ModelSpec, TrainConfig, TransformKind, TransformSpec
from nsdlab.datasets import make_blobs, split_train_test
from nsdlab.decomposition import raw_pixel_plan
from nsdlab.evalharness import (
    evaluate_images,
    evaluate_synthetic,
    flip_and_crop,
    random_crop,
    random_flip,
    random_subset_baseline,
    sample_subset,
)
from nsdlab.matching import detached_images
from nsdlab.transforms import initial_state


BUDGET = BudgetSpec(num_classes=2, ipc=3, image_shape=(1, 4, 4))


@pytest.fixture
def eval_cfg():
    return TrainConfig(epochs=2, batch_size=8, lr=0.05, momentum=0.9, weight_decay=0.0, augment=True)


class TestAugment:
    """Test flips and crops."""

    def test_flip_mirrors_width(self):
        images = np.arange(8.0).reshape(2, 1, 2, 2)
        always = random_flip(images, np.random.default_rng(0))
        for original, out in zip(images, always, strict=True):
            assert np.array_equal(out, original) or np.array_equal(out, original[..., ::-1])

    def test_crop_keeps_shape(self):
        images = np.ones((3, 2, 4, 4))
        out = random_crop(images, np.random.default_rng(0))
        assert out.shape == images.shape
        assert out.max() == 1.0

    def test_zero_pad_crop_is_identity(self):
        images = np.random.default_rng(0).normal(size=(2, 1, 3, 3))
        np.testing.assert_array_equal(random_crop(images, np.random.default_rng(0), pad=0), images)

    def test_input_untouched(self):
        images = np.random.default_rng(0).normal(size=(4, 1, 4, 4))
        copy = images.copy()
        flip_and_crop(images, np.random.default_rng(1))
        np.testing.assert_array_equal(images, copy)


class TestSampleSubset:
    """Test the random control subset."""

    def test_class_balanced(self, tiny_blobs):
        subset = sample_subset(tiny_blobs, BUDGET, np.random.default_rng(0))
        assert len(subset) == 6
        assert np.bincount(subset.labels).tolist() == [3, 3]

    def test_seeded(self, tiny_blobs):
        a = sample_subset(tiny_blobs, BUDGET, np.random.default_rng(4))
        b = sample_subset(tiny_blobs, BUDGET, np.random.default_rng(4))
        np.testing.assert_array_equal(a.images, b.images)

    def test_budget_larger_than_data(self, tiny_blobs):
        with pytest.raises(RangeError, match="exceeds"):
            sample_subset(tiny_blobs, BudgetSpec(num_classes=2, ipc=30, image_shape=(1, 4, 4)), np.random.default_rng(0))

    def test_class_too_small(self, tiny_blobs):
        keep = np.concatenate([np.flatnonzero(tiny_blobs.labels == 0)[:1], np.flatnonzero(tiny_blobs.labels == 1)])
        data = tiny_blobs.subset(np.sort(keep))
        with pytest.raises(RangeError, match="Class 0"):
            sample_subset(data, BUDGET, np.random.default_rng(0))


class TestEvaluate:
    """Test repeated train-and-test runs."""

    def test_repeats_and_range(self, tiny_blobs, mlp_spec, eval_cfg):
        report = evaluate_images(tiny_blobs, tiny_blobs, eval_cfg, mlp_spec, repeats=3, seed=1, label="real")
        assert report.repeats == 3
        assert all(0.0 <= a <= 1.0 for a in report.accuracies)
        assert report.label == "real"

    def test_single_repeat_has_zero_std(self, tiny_blobs, mlp_spec, eval_cfg):
        report = evaluate_images(tiny_blobs, tiny_blobs, eval_cfg, mlp_spec, repeats=1)
        assert report.std == 0.0

    def test_zero_repeats(self, tiny_blobs, mlp_spec, eval_cfg):
        with pytest.raises(ConfigError):
            evaluate_images(tiny_blobs, tiny_blobs, eval_cfg, mlp_spec, repeats=0)

    def test_seeded(self, tiny_blobs, mlp_spec, eval_cfg):
        a = evaluate_images(tiny_blobs, tiny_blobs, eval_cfg, mlp_spec, repeats=2, seed=9)
        b = evaluate_images(tiny_blobs, tiny_blobs, eval_cfg, mlp_spec, repeats=2, seed=9)
        assert a.accuracies == b.accuracies

    def test_synthetic_leaves_state_untouched(self, small_state, tiny_blobs, mlp_spec, eval_cfg):
        digest = small_state.digest()
        report = evaluate_synthetic(small_state, tiny_blobs, eval_cfg, 2, spec=mlp_spec)
        assert small_state.digest() == digest
        assert report.metadata["images"] == 4
        assert report.label == "synthetic"

    def test_random_subset_baseline(self, tiny_blobs, mlp_spec, eval_cfg):
        report = random_subset_baseline(
            tiny_blobs, BUDGET, 2, test_set=tiny_blobs, train_cfg=eval_cfg, spec=mlp_spec, seed=0
        )
        assert report.label == "random"
        assert report.metadata["images"] == 6
        assert report.repeats == 2


class TestAccuracyBounds:
    """Accuracy on separable blobs against the trivial and full-data levels."""

    @pytest.fixture
    def blob_spec(self):
        return ModelSpec(family=ModelFamily.MLP, depth=1, width=16, input_shape=(1, 8, 8), num_classes=2)

    @pytest.fixture
    def train_cfg(self):
        return TrainConfig(epochs=30, batch_size=16, lr=0.05, momentum=0.9, weight_decay=0.0)

    def test_exact_copy_of_separable_set(self, blob_spec, train_cfg):
        data = make_blobs(classes=2, samples=40, image_size=8, noise=0.05, seed=3)
        plan = raw_pixel_plan(BudgetSpec(num_classes=2, ipc=20, image_shape=(1, 8, 8)))
        state = initial_state(plan, TransformSpec(TransformKind.IDENTITY), 2, np.random.default_rng(0), real=data)
        copied = detached_images(state)
        order = np.lexsort(copied.images.reshape(40, -1).T)
        expected = np.lexsort(data.images.reshape(40, -1).T)
        np.testing.assert_array_equal(copied.images[order], data.images[expected])
        np.testing.assert_array_equal(copied.labels[order], data.labels[expected])

        report = evaluate_synthetic(state, data, train_cfg, 3, spec=blob_spec)
        assert float(np.median(report.accuracies)) > 0.95

    def test_random_subset_between_chance_and_full_data(self, blob_spec, train_cfg):
        train, test = split_train_test(make_blobs(classes=2, samples=200, image_size=8, seed=7), 0.3, 1)
        full = evaluate_images(train, test, train_cfg, blob_spec, repeats=5, seed=2)
        subset = random_subset_baseline(
            train,
            BudgetSpec(num_classes=2, ipc=1, image_shape=(1, 8, 8)),
            5,
            test_set=test,
            train_cfg=train_cfg,
            spec=blob_spec,
            seed=2,
        )
        chance = 0.5
        assert chance < float(np.median(subset.accuracies)) < float(np.median(full.accuracies))
