"""Tests for run configuration loading and validation."""

import pytest

from nsdlab.core.config import AUTO, SCHEMA, RunConfig, load_config, parse_override
from nsdlab.core.exceptions import ConfigError, FileOperationError
from nsdlab.core.types import DistillMethod, ModelFamily, TransformKind


class TestParseOverride:
    """Test key=value parsing."""

    def test_integer_literal(self):
        assert parse_override("distill.iterations=50") == ("distill.iterations", 50)

    def test_float_literal(self):
        assert parse_override("distill.inner_lr = 0.5") == ("distill.inner_lr", 0.5)

    def test_boolean_literal(self):
        assert parse_override("eval.augment=false") == ("eval.augment", False)

    def test_bare_string(self):
        assert parse_override("transform.kind=dct") == ("transform.kind", "dct")

    def test_list_literal(self):
        assert parse_override("transform.band_probs=[1, 0, 0.5]") == ("transform.band_probs", [1, 0, 0.5])

    def test_missing_equals(self):
        with pytest.raises(ConfigError, match="key=value"):
            parse_override("distill.iterations")


class TestLoadConfig:
    """Test layered configuration resolution."""

    def test_defaults(self):
        cfg = load_config()
        assert cfg["seed"] == 0
        assert cfg["decomposition.t1"] == AUTO
        assert cfg.source is None
        assert set(cfg.values) == set(SCHEMA)

    def test_file_then_overrides(self, tmp_path):
        path = tmp_path / "run.toml"
        path.write_text('seed = 3\ndistill.iterations = 7\ntransform.kind = "dct"\n', encoding="utf-8")

        cfg = load_config(path, ["distill.iterations=9"])

        assert cfg["seed"] == 3
        assert cfg["distill.iterations"] == 9
        assert cfg["transform.kind"] == "dct"
        assert cfg.source == str(path)

    def test_nested_tables_flatten(self, tmp_path):
        path = tmp_path / "run.toml"
        path.write_text("[distill]\ninner_steps = 4\n", encoding="utf-8")
        assert load_config(path)["distill.inner_steps"] == 4

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="Unknown configuration key"):
            load_config(overrides=["distill.bogus=1"])

    def test_wrong_type(self):
        with pytest.raises(ConfigError, match="expects int"):
            load_config(overrides=["distill.iterations=1.5"])

    def test_bool_is_not_int(self):
        with pytest.raises(ConfigError):
            load_config(overrides=["seed=true"])

    def test_int_promoted_to_float(self):
        assert load_config(overrides=["distill.inner_lr=1"])["distill.inner_lr"] == 1.0

    def test_zero_ipc_rejected(self):
        with pytest.raises(ConfigError, match="ipc"):
            load_config(overrides=["budget.ipc=0"])

    def test_invalid_kind(self):
        with pytest.raises(ConfigError, match="Unsupported transform kind"):
            load_config(overrides=["transform.kind=fourier"])

    def test_invalid_method(self):
        with pytest.raises(ConfigError):
            load_config(overrides=["distill.method=kip"])

    def test_negative_guided_weight(self):
        with pytest.raises(ConfigError, match="guided_weight"):
            load_config(overrides=["distill.guided_weight=-1"])

    def test_init_and_clip_keys(self):
        cfg = load_config(overrides=["transform.init_from_real=false", "transform.init_scale=0.2", "distill.outer_clip=0"])
        spec = cfg.transform_spec()
        assert spec.init_from_real is False
        assert spec.init_scale == pytest.approx(0.2)
        assert cfg.distill_config().outer_clip == 0.0

    def test_non_positive_init_scale(self):
        with pytest.raises(ConfigError, match="init_scale"):
            load_config(overrides=["transform.init_scale=0"])

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileOperationError):
            load_config(tmp_path / "missing.toml")

    def test_invalid_toml(self, tmp_path):
        path = tmp_path / "bad.toml"
        path.write_text("seed = = 1", encoding="utf-8")
        with pytest.raises(ConfigError, match="not valid TOML"):
            load_config(path)

    def test_auto_accepts_integer(self):
        assert load_config(overrides=["decomposition.t1=3"])["decomposition.t1"] == 3


class TestRunConfig:
    """Test typed views, digests and persistence."""

    def setup_method(self):
        self.cfg = load_config()

    def test_typed_views(self):
        distill = self.cfg.distill_config()
        assert distill.method is DistillMethod.MTT
        assert distill.seed == self.cfg["seed"]
        assert self.cfg.transform_spec().kind is TransformKind.RANDOM
        spec = self.cfg.model_spec((1, 8, 8), 2)
        assert spec.family is ModelFamily.CONVNET
        assert self.cfg.eval_config().augment is True

    def test_budget_spec_from_dataset_keys(self):
        budget = self.cfg.budget_spec()
        assert budget.image_shape == (1, 8, 8)
        assert budget.num_classes == 2
        assert budget.ratio_percent is None

    def test_budget_spec_train_size(self):
        assert self.cfg.budget_spec(train_size=200).ratio_percent == pytest.approx(1.0)

    def test_digest_stable(self):
        assert self.cfg.digest() == load_config().digest()

    def test_digest_changes_with_value(self):
        assert self.cfg.digest() != self.cfg.with_values({"seed": 1}).digest()

    def test_with_values_does_not_mutate(self):
        changed = self.cfg.with_values({"distill.iterations": 3})
        assert changed["distill.iterations"] == 3
        assert self.cfg["distill.iterations"] == 1000

    def test_getitem_unknown(self):
        with pytest.raises(ConfigError):
            self.cfg["nope"]

    def test_save_round_trip(self, tmp_path):
        cfg = self.cfg.with_values({"seed": 11, "transform.kind": "dwt", "dataset.mean": [0.5]})
        path = cfg.save(tmp_path / "resolved.toml")
        again = load_config(path)
        assert again.digest() == cfg.digest()

    def test_direct_construction_validates(self):
        with pytest.raises(ConfigError):
            RunConfig(values={"eval.repeats": 0})
