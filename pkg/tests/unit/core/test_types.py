"""Tests for shared data classes and enums."""

import numpy as np
import pytest

from nsdlab.core.exceptions import ConfigError
from nsdlab.core.types import (
    BudgetSpec,
    DistillConfig,
    EvalReport,
    LabeledImages,
    LabelRule,
    ModelFamily,
    ModelSpec,
    TransformKind,
    TransformSpec,
)


class TestTransformKind:
    """Test transform kind properties."""

    @pytest.mark.parametrize(
        ("kind", "trainable", "analytic"),
        [
            (TransformKind.RANDOM, True, False),
            (TransformKind.DCT, False, True),
            (TransformKind.LDCT, True, True),
            (TransformKind.DWT, False, True),
            (TransformKind.SVD, False, False),
            (TransformKind.LSVD, True, False),
            (TransformKind.IDENTITY, False, True),
        ],
    )
    def test_flags(self, kind, trainable, analytic):
        assert kind.trainable is trainable
        assert kind.analytic is analytic

    def test_parse_case_insensitive(self):
        assert TransformKind.parse("LDCT") is TransformKind.LDCT

    def test_parse_unknown_lists_choices(self):
        with pytest.raises(ConfigError, match="random, dct"):
            TransformKind.parse("wavelet")


class TestSpecs:
    """Test validation in spec data classes."""

    def test_transform_spec_band_count(self):
        with pytest.raises(ConfigError, match="three entries"):
            TransformSpec(band_probs=(0.5, 0.5))  # type: ignore[arg-type]

    def test_transform_spec_band_range(self):
        with pytest.raises(ConfigError):
            TransformSpec(band_probs=(0.5, 1.5, 0.5))

    def test_transform_spec_rank(self):
        with pytest.raises(ConfigError):
            TransformSpec(truncation_rank=0)

    def test_label_rule_parse(self):
        assert LabelRule.parse("per_pair") is LabelRule.PER_PAIR
        with pytest.raises(ConfigError):
            LabelRule.parse("per_image")

    def test_model_spec_round_trip(self):
        spec = ModelSpec(family=ModelFamily.MLP, depth=2, width=5, input_shape=(3, 4, 4), num_classes=4)
        assert ModelSpec.from_dict(spec.to_dict()) == spec

    def test_model_spec_needs_two_classes(self):
        with pytest.raises(ConfigError):
            ModelSpec(num_classes=1)

    def test_budget_scalars(self):
        budget = BudgetSpec(num_classes=10, ipc=1, image_shape=(3, 32, 32))
        assert budget.budget_scalars == 30720

    def test_budget_ratio(self):
        budget = BudgetSpec(num_classes=10, ipc=10, image_shape=(3, 32, 32), train_size=50000)
        assert budget.ratio_percent == pytest.approx(0.2)

    def test_budget_zero_ipc(self):
        with pytest.raises(ConfigError, match="ipc"):
            BudgetSpec(num_classes=10, ipc=0, image_shape=(3, 32, 32))

    def test_budget_exceeds_train_size(self):
        with pytest.raises(ConfigError, match="exceeds"):
            BudgetSpec(num_classes=2, ipc=5, image_shape=(1, 4, 4), train_size=8)

    def test_distill_config_collects_problems(self):
        with pytest.raises(ConfigError) as excinfo:
            DistillConfig(inner_steps=0, inner_lr=0.0)
        assert "inner_steps=0" in str(excinfo.value)
        assert "inner_lr=0.0" in str(excinfo.value)


class TestEvalReport:
    """Test aggregate statistics of evaluation reports."""

    def test_mean_and_std(self):
        report = EvalReport([0.5, 0.7], ModelSpec(), label="x")
        assert report.mean == pytest.approx(0.6)
        assert report.std == pytest.approx(0.1)
        assert report.repeats == 2

    def test_single_repeat_has_zero_std(self):
        assert EvalReport([0.4], ModelSpec()).std == 0.0

    def test_empty_rejected(self):
        with pytest.raises(ConfigError):
            EvalReport([], ModelSpec())

    def test_to_dict_includes_metadata(self):
        report = EvalReport([1.0], ModelSpec(), config_digest="abc", metadata={"images": 4})
        record = report.to_dict()
        assert record["images"] == 4
        assert record["config_digest"] == "abc"
        assert record["spec"]["family"] == "convnet"


class TestLabeledImages:
    """Test labeled image batches."""

    def test_shape_checks(self):
        with pytest.raises(ConfigError):
            LabeledImages(np.zeros((2, 4, 4)), np.zeros(2, dtype=int), 2)
        with pytest.raises(ConfigError):
            LabeledImages(np.zeros((2, 1, 4, 4)), np.zeros(3, dtype=int), 2)

    def test_subset(self):
        data = LabeledImages(np.arange(12.0).reshape(3, 1, 2, 2), np.array([0, 1, 0]), 2)
        sub = data.subset(np.array([2, 0]))
        assert len(sub) == 2
        assert sub.image_shape == (1, 2, 2)
        np.testing.assert_array_equal(sub.labels, [0, 0])
