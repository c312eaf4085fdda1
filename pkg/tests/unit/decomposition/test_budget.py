"""Tests for storage accounting and extent planning."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nsdlab.core.exceptions import ConfigError
from nsdlab.core.types import BudgetSpec, TransformKind
from nsdlab.decomposition import (
    DistillState,
    SpectrumTensor,
    budget_check,
    full_kernel_count,
    parameter_count,
    plan_dimensions,
    planned_count,
    raw_pixel_plan,
    spatial_extent,
    spectrum_name,
)
from nsdlab.diffmath import Node
from nsdlab.transforms import make_kernel_factors


CIFAR_LIKE = BudgetSpec(num_classes=10, ipc=1, image_shape=(3, 32, 32))


def single_pair_state(kind, tensor_dims, out_extents, num_classes=10):
    rng = np.random.default_rng(0)
    tensor = SpectrumTensor(Node.leaf(np.zeros(tensor_dims), name=spectrum_name(0)), class_id=0, index=0)
    kernel = make_kernel_factors(kind, tensor_dims, out_extents, rng=rng)
    return DistillState(tensors=(tensor,), kernels=(kernel,), num_classes=num_classes)


class TestParameterCount:
    """Test stored-scalar accounting."""

    def test_worked_example(self):
        state = single_pair_state(TransformKind.RANDOM, (35, 3, 16, 16), (64, 3, 32, 32))
        assert parameter_count(state) == 26880 + (35 * 64 + 9 + 512 + 512) == 30153

    def test_frozen_analytic_factors_are_free(self):
        state = single_pair_state(TransformKind.DCT, (2, 1, 4, 4), (3, 1, 8, 8))
        assert parameter_count(state) == 2 * 16 + (2 * 3 + 1)

    def test_learnable_dct_counts_fully(self):
        state = single_pair_state(TransformKind.LDCT, (2, 1, 4, 4), (3, 1, 8, 8))
        assert parameter_count(state) == 32 + 6 + 1 + 32 + 32

    def test_separable_vs_composed(self):
        state = single_pair_state(TransformKind.RANDOM, (2, 2, 2, 2), (3, 3, 3, 3))
        assert parameter_count(state) - 16 == 24
        assert full_kernel_count(state) - 16 == 1296

    def test_planned_count_agrees(self):
        state = single_pair_state(TransformKind.DWT, (2, 3, 4, 4), (4, 3, 8, 8))
        assert planned_count((2, 3, 4, 4), (4, 3, 8, 8), 1, 1, TransformKind.DWT) == parameter_count(state)

    @given(st.integers(1, 3), st.integers(1, 3), st.integers(1, 3), st.integers(1, 3))
    def test_separable_smaller_than_composed(self, t1, t2, t3, t4):
        dims = (t1, t2, t3, t4)
        out = tuple(t + 1 for t in dims)
        state = single_pair_state(TransformKind.RANDOM, dims, out)
        assert parameter_count(state) < full_kernel_count(state)


class TestBudgetCheck:
    """Test the budget report."""

    def test_worked_example(self):
        state = single_pair_state(TransformKind.RANDOM, (35, 3, 16, 16), (64, 3, 32, 32))
        report = budget_check(state, CIFAR_LIKE)
        assert report.ok
        assert report.allowed == 30720
        assert report.stored == 30153
        assert report.utilization == pytest.approx(0.9815, abs=1e-4)

    def test_boundary_is_inclusive(self):
        state = single_pair_state(TransformKind.DCT, (1, 1, 2, 2), (1, 1, 2, 2), num_classes=2)
        budget = BudgetSpec(num_classes=1, ipc=1, image_shape=(1, 2, 3))
        report = budget_check(state, budget)
        assert report.stored == report.allowed == 6
        assert report.ok

    def test_over_budget_is_reported(self):
        state = single_pair_state(TransformKind.RANDOM, (35, 3, 16, 16), (64, 3, 32, 32))
        report = budget_check(state, BudgetSpec(num_classes=1, ipc=1, image_shape=(3, 32, 32)))
        assert not report.ok
        assert report.utilization > 1


class TestPlanning:
    """Test automatic extent resolution."""

    @pytest.mark.parametrize(("size", "ipc", "expected"), [(32, 1, 16), (32, 10, 16), (32, 50, 28), (28, 50, 25), (8, 10, 4)])
    def test_spatial_schedule(self, size, ipc, expected):
        assert spatial_extent(size, ipc) == expected

    def test_auto_plan_maximizes_t1(self):
        plan = plan_dimensions(CIFAR_LIKE)
        t1 = plan.tensor_dims[0]
        assert plan.tensor_dims[1:] == (3, 16, 16)
        assert plan.out_extents == (2 * t1, 3, 32, 32)
        assert plan.report.ok
        bigger = plan_dimensions(CIFAR_LIKE, t1=t1 + 1)
        assert not bigger.report.ok

    def test_auto_plan_cifar_value(self):
        plan = plan_dimensions(CIFAR_LIKE)
        assert plan.tensor_dims[0] == 3
        assert plan.report.stored == 10 * 3 * 768 + (3 * 6 + 9 + 512 + 512)

    def test_frozen_transform_allows_larger_t1(self):
        random_plan = plan_dimensions(CIFAR_LIKE, TransformKind.RANDOM)
        dct_plan = plan_dimensions(CIFAR_LIKE, TransformKind.DCT)
        assert dct_plan.tensor_dims[0] >= random_plan.tensor_dims[0]

    def test_explicit_dims(self):
        plan = plan_dimensions(CIFAR_LIKE, t1=2, t3=8, u1=5)
        assert plan.tensor_dims == (2, 3, 8, 8)
        assert plan.out_extents == (5, 3, 32, 32)
        assert plan.images == 10 * 5

    def test_t1_above_u1_rejected(self):
        with pytest.raises(ConfigError, match="t1 <= u1"):
            plan_dimensions(CIFAR_LIKE, t1=4, u1=3)

    def test_spatial_extent_too_large(self):
        with pytest.raises(ConfigError, match="within the image size"):
            plan_dimensions(CIFAR_LIKE, t3=40)

    def test_infeasible_budget(self):
        budget = BudgetSpec(num_classes=2, ipc=1, image_shape=(1, 2, 2))
        with pytest.raises(ConfigError, match="No feasible decomposition"):
            plan_dimensions(budget, tensors_per_class=4)

    def test_disabled_uses_raw_pixels(self):
        plan = plan_dimensions(CIFAR_LIKE, enabled=False)
        assert plan == raw_pixel_plan(CIFAR_LIKE)
        assert plan.kind is TransformKind.IDENTITY
        assert plan.report.stored == plan.report.allowed

    def test_shrinking_never_breaks_budget(self):
        for t1 in range(1, 4):
            for t3 in range(1, 17):
                small = plan_dimensions(CIFAR_LIKE, t1=t1, t3=t3)
                if small.report.ok and t3 > 1:
                    assert plan_dimensions(CIFAR_LIKE, t1=t1, t3=t3 - 1).report.ok

    def test_to_dict(self):
        record = plan_dimensions(CIFAR_LIKE).to_dict()
        assert record["kind"] == "random"
        assert record["ok"] is True
