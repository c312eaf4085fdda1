"""Tests for the outer distillation loop, checkpoints and metric logs."""

import json
from dataclasses import replace

import numpy as np
import pytest

from nsdlab.core.exceptions import ConfigError, ContractViolationError, DataFormatError, SamplingError
from nsdlab.core.seeding import SeedStreams
from nsdlab.core.types import DistillConfig, DistillMethod, TransformKind
from nsdlab.decomposition import spectrum_name
from nsdlab.formats import load_container, save_container
from nsdlab.matching import (
    CheckpointWriter,
    ExpertBank,
    MetricLogWriter,
    clip_global_norm,
    detached_images,
    distill,
    distill_step,
    load_checkpoint,
    prepare_metric_log,
    replay_student,
    sample_segment,
    save_checkpoint,
)
from nsdlab.models import Model


@pytest.fixture
def cfg():
    return DistillConfig(
        inner_steps=2,
        expert_span=1,
        inner_lr=0.05,
        guided_weight=0.0,
        outer_lr=0.1,
        outer_momentum=0.5,
        iterations=4,
        batch_size=2,
        seed=3,
    )


def assert_same_values(a, b):
    nodes_a, nodes_b = a.named_nodes(), b.named_nodes()
    assert set(nodes_a) == set(nodes_b)
    for name, node in nodes_a.items():
        np.testing.assert_allclose(node.value, nodes_b[name].value, atol=1e-12)


class TestSampleSegment:
    """Test expert segment sampling."""

    def test_start_leaves_room_for_span(self, expert_bank):
        rng = np.random.default_rng(0)
        for _ in range(20):
            k, start = sample_segment(expert_bank, 2, rng)
            assert k == 0
            assert 0 <= start <= len(expert_bank.trajectories[0]) - 3

    def test_span_too_long(self, expert_bank):
        with pytest.raises(SamplingError, match="longest has 4"):
            sample_segment(expert_bank, 4, np.random.default_rng(0))


class TestDistillStep:
    """Test one outer iteration."""

    def test_zero_outer_lr_keeps_values(self, small_state, expert_bank, cfg):
        result = distill_step(small_state, expert_bank, replace(cfg, outer_lr=0.0), np.random.default_rng(0))
        assert_same_values(result.state, small_state)
        assert result.state.step == 1
        assert result.metrics.iteration == 1

    def test_update_changes_spectra(self, small_state, expert_bank, cfg):
        result = distill_step(small_state, expert_bank, cfg, np.random.default_rng(0))
        before = small_state.tensors[0].values.value
        assert not np.array_equal(result.state.tensors[0].values.value, before)
        assert set(result.state.optimizer.velocity) == set(small_state.trainable_leaves())

    def test_frozen_factors_stay_fixed(self, state_factory, expert_bank, cfg):
        state = state_factory(kind=TransformKind.DCT)
        result = distill_step(state, expert_bank, cfg, np.random.default_rng(0))
        for mode in (3, 4):
            np.testing.assert_array_equal(
                result.state.kernels[0].factor(mode).values.value, state.kernels[0].factor(mode).values.value
            )

    def test_replay_matches_student(self, small_state, expert_bank, cfg):
        result = distill_step(small_state, expert_bank, cfg, np.random.default_rng(1))
        synthetic = detached_images(small_state)
        start = expert_bank.trajectories[result.trajectory][result.start]
        replayed = replay_student(
            Model(expert_bank.spec), start, synthetic.images, synthetic.labels, result.batch_indices, cfg.inner_lr
        )
        np.testing.assert_allclose(replayed, result.student_final, atol=1e-10)
        assert len(result.batch_indices) == cfg.inner_steps

    def test_no_guided_loss_at_zero_weight(self, small_state, expert_bank, cfg):
        metrics = distill_step(small_state, expert_bank, cfg, np.random.default_rng(0)).metrics
        assert metrics.guided is None
        assert metrics.combined == pytest.approx(metrics.match)

    def test_guided_loss_combines(self, small_state, expert_bank, cfg, tiny_blobs):
        weighted = replace(cfg, guided_weight=0.5)
        metrics = distill_step(small_state, expert_bank, weighted, np.random.default_rng(0), real=tiny_blobs).metrics
        assert metrics.guided is not None
        assert metrics.combined == pytest.approx(metrics.match + 0.5 * metrics.guided)

    def test_guided_loss_needs_real_data(self, small_state, expert_bank, cfg):
        with pytest.raises(ConfigError, match="real training set"):
            distill_step(small_state, expert_bank, replace(cfg, guided_weight=0.1), np.random.default_rng(0))

    def test_mtt_needs_bank(self, small_state, cfg, mlp_spec):
        with pytest.raises(ConfigError, match="expert bank"):
            distill_step(small_state, None, cfg, np.random.default_rng(0), model=Model(mlp_spec))

    @pytest.mark.parametrize("method", [DistillMethod.DM, DistillMethod.DC])
    def test_baseline_methods(self, small_state, cfg, mlp_spec, tiny_blobs, method):
        baseline = replace(cfg, method=method, batch_size=8)
        result = distill_step(
            small_state, None, baseline, np.random.default_rng(0), real=tiny_blobs, model=Model(mlp_spec)
        )
        assert result.trajectory is None
        assert result.student_final is None
        assert result.metrics.guided is None
        assert result.metrics.match == pytest.approx(result.metrics.combined)

    def test_dwt_state_draws_mask(self, state_factory, expert_bank, cfg):
        state = state_factory(kind=TransformKind.DWT, band_probs=(0.5, 0.5, 0.5))
        result = distill_step(state, expert_bank, cfg, np.random.default_rng(0))
        assert result.mask is not None
        assert result.mask.shape == (1, 1, 2, 2)
        assert result.mask[0, 0, 0, 0] == 1.0

    def test_non_finite_loss_stops_the_run(self, small_state, expert_bank, cfg):
        broken = small_state.with_values({spectrum_name(0): np.full((1, 1, 2, 2), np.nan)})
        with pytest.raises(ContractViolationError, match="Outer step 1 diverged"):
            distill_step(broken, expert_bank, cfg, np.random.default_rng(0))
        with pytest.raises(ContractViolationError, match="non-finite gradient"):
            distill(broken, expert_bank, cfg)

    def test_clip_bounds_the_update(self, small_state, expert_bank, cfg):
        plain = replace(cfg, outer_lr=1.0, outer_momentum=0.0, outer_clip=0.0)
        clipped = replace(plain, outer_clip=1e-3)
        full = distill_step(small_state, expert_bank, plain, np.random.default_rng(0)).state
        short = distill_step(small_state, expert_bank, clipped, np.random.default_rng(0)).state

        def step_norm(after):
            nodes = after.named_nodes()
            return float(
                np.sqrt(sum(np.sum((n.value - nodes[k].value) ** 2) for k, n in small_state.trainable_leaves().items()))
            )

        assert step_norm(full) > 1e-3
        assert step_norm(short) == pytest.approx(1e-3)

    def test_wall_clock_only_when_asked(self, small_state, expert_bank, cfg):
        plain = distill_step(small_state, expert_bank, cfg, np.random.default_rng(0)).metrics
        timed = distill_step(small_state, expert_bank, replace(cfg, log_wall_clock=True), np.random.default_rng(0))
        assert "wall_clock" not in plain.to_dict()
        assert timed.metrics.wall_clock is not None


class TestDistillLoop:
    """Test the full loop and resuming."""

    def test_runs_to_iterations(self, small_state, expert_bank, cfg):
        result = distill(small_state, expert_bank, cfg)
        assert result.state.step == cfg.iterations
        assert [m.iteration for m in result.metrics] == [1, 2, 3, 4]

    def test_same_seed_same_result(self, small_state, expert_bank, cfg):
        a = distill(small_state, expert_bank, cfg)
        b = distill(small_state, expert_bank, cfg)
        assert a.state.digest() == b.state.digest()

    def test_resume_matches_uninterrupted_run(self, small_state, expert_bank, cfg, tmp_path):
        full = distill(small_state, expert_bank, cfg)
        half = distill(small_state, expert_bank, replace(cfg, iterations=2))
        save_checkpoint(tmp_path / "state.nsdt", half.state)
        restored, _ = load_checkpoint(tmp_path / "state.nsdt")
        resumed = distill(restored, expert_bank, cfg)
        assert len(resumed.metrics) == 2
        assert_same_values(resumed.state, full.state)

    def test_step_uses_named_stream(self, small_state, expert_bank, cfg):
        looped = distill(small_state, expert_bank, replace(cfg, iterations=1))
        single = distill_step(small_state, expert_bank, cfg, SeedStreams(cfg.seed).generator("distill", 0))
        assert_same_values(looped.state, single.state)


class TestCheckpoints:
    """Test checkpoint persistence."""

    def test_round_trip(self, state_factory, expert_bank, cfg, tmp_path):
        state = state_factory(n_tensors=2, n_kernels=2, kind=TransformKind.DWT, band_probs=(0.2, 0.4, 0.6))
        stepped = distill_step(state, expert_bank, cfg, np.random.default_rng(0)).state
        save_checkpoint(tmp_path / "ck.nsdt", stepped, fingerprint="abc")
        restored, fingerprint = load_checkpoint(tmp_path / "ck.nsdt")
        assert fingerprint == "abc"
        assert restored.step == 1
        assert restored.band_probs == (0.2, 0.4, 0.6)
        assert set(restored.trainable_leaves()) == set(stepped.trainable_leaves())
        assert restored.digest() == stepped.digest()
        for name, velocity in stepped.optimizer.velocity.items():
            np.testing.assert_array_equal(restored.optimizer.velocity[name], velocity)

    def test_missing_metadata(self, tmp_path):
        save_container(tmp_path / "bad.nsdt", {"x": np.zeros(1)})
        with pytest.raises(DataFormatError, match="no checkpoint metadata"):
            load_checkpoint(tmp_path / "bad.nsdt")

    def test_label_rule_mismatch(self, small_state, tmp_path):
        path = save_checkpoint(tmp_path / "ck.nsdt", small_state)
        records = load_container(path)
        records["labels"] = np.array([1, 0], dtype=np.int64)
        save_container(path, records)
        with pytest.raises(DataFormatError, match="disagree"):
            load_checkpoint(path)

    def test_checkpoint_writer_cadence(self, small_state, expert_bank, cfg, tmp_path):
        path = tmp_path / "ck.nsdt"
        writer = CheckpointWriter(path, every=100)
        distill(small_state, expert_bank, replace(cfg, iterations=1), callbacks=[writer])
        assert load_checkpoint(path)[0].step == 1


class TestMetricLog:
    """Test the JSON-lines metric log."""

    def test_one_line_per_step(self, small_state, expert_bank, cfg, tmp_path):
        path = tmp_path / "metrics.jsonl"
        distill(small_state, expert_bank, cfg, callbacks=[MetricLogWriter(path)])
        lines = [json.loads(line) for line in path.read_text().splitlines()]
        assert [line["iteration"] for line in lines] == [1, 2, 3, 4]
        assert lines[0]["guided"] is None
        assert set(lines[0]) == {"iteration", "match", "guided", "combined"}

    def test_prepare_truncates_to_checkpoint(self, tmp_path):
        path = tmp_path / "metrics.jsonl"
        path.write_text("".join(json.dumps({"iteration": i}) + "\n" for i in range(1, 6)))
        prepare_metric_log(path, 3)
        assert len(path.read_text().splitlines()) == 3
        prepare_metric_log(tmp_path / "absent.jsonl", 3)


class TestExpertBankInputs:
    """Test bank-level checks used by the loop."""

    def test_bank_requires_trajectories(self):
        with pytest.raises(ConfigError):
            ExpertBank((), "x")


class TestClipGlobalNorm:
    """Test joint gradient clipping."""

    def test_scales_all_gradients_together(self):
        gradients = {"a": np.array([3.0, 0.0]), "b": np.array([[4.0]])}
        clipped = clip_global_norm(gradients, 1.0)
        np.testing.assert_allclose(clipped["a"], [0.6, 0.0])
        np.testing.assert_allclose(clipped["b"], [[0.8]])

    def test_small_gradients_untouched(self):
        gradients = {"a": np.array([0.3, 0.4])}
        assert clip_global_norm(gradients, 1.0)["a"] is gradients["a"]

    def test_zero_disables(self):
        gradients = {"a": np.array([30.0, 40.0])}
        np.testing.assert_array_equal(clip_global_norm(gradients, 0.0)["a"], [30.0, 40.0])

    def test_negative_clip_rejected(self):
        with pytest.raises(ConfigError, match="outer_clip"):
            DistillConfig(outer_clip=-1.0)
