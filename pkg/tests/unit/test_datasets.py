"""Tests for dataset loading, splitting and normalization."""

import numpy as np
import pytest

from nsdlab.core.config import load_config
from nsdlab.core.exceptions import ConfigError, DataError, FileOperationError
from nsdlab.core.types import LabeledImages
from nsdlab.datasets import (
    channel_stats,
    fingerprint,
    load_dataset,
    load_idx_pair,
    load_raw_records,
    make_blobs,
    normalize,
    split_train_test,
)
from nsdlab.formats import IdxFormatAdapter, RawRecordFormatAdapter


class TestMakeBlobs:
    """Test the synthetic dataset."""

    def test_shape_range_and_balance(self):
        data = make_blobs(classes=3, samples=30, image_size=6, channels=2, seed=1)
        assert data.images.shape == (30, 2, 6, 6)
        assert data.images.min() >= 0.0
        assert data.images.max() <= 1.0
        assert np.bincount(data.labels).tolist() == [10, 10, 10]

    def test_seeded(self):
        a = make_blobs(seed=5)
        b = make_blobs(seed=5)
        np.testing.assert_array_equal(a.images, b.images)
        assert fingerprint(a) == fingerprint(b)
        assert fingerprint(a) != fingerprint(make_blobs(seed=6))

    def test_invalid_settings(self):
        with pytest.raises(ConfigError):
            make_blobs(classes=1)


class TestSplitAndNormalize:
    """Test stratified splits and channel statistics."""

    def test_stratified_split(self, tiny_blobs):
        train, test = split_train_test(tiny_blobs, 0.25, seed=0)
        assert len(train) + len(test) == len(tiny_blobs)
        assert np.bincount(test.labels).tolist() == [5, 5]

    def test_split_needs_test_images(self):
        data = LabeledImages(np.zeros((2, 1, 2, 2)), np.array([0, 1]), 2)
        with pytest.raises(ConfigError, match="no test images"):
            split_train_test(data, 0.1, seed=0)

    def test_normalize_gives_zero_mean_unit_std(self, tiny_blobs):
        mean, std = channel_stats(tiny_blobs.images)
        normalized = normalize(tiny_blobs, mean, std)
        np.testing.assert_allclose(normalized.images.mean(axis=(0, 2, 3)), 0.0, atol=1e-12)
        np.testing.assert_allclose(normalized.images.std(axis=(0, 2, 3)), 1.0)

    def test_constant_channel_keeps_unit_std(self):
        _, std = channel_stats(np.ones((3, 2, 2, 2)))
        np.testing.assert_array_equal(std, [1.0, 1.0])


class TestLoaders:
    """Test file-backed datasets."""

    def test_idx_pair(self, tmp_path):
        adapter = IdxFormatAdapter()
        pixels = np.full((4, 3, 3), 255, dtype=np.uint8)
        (tmp_path / "images.idx").write_bytes(adapter.encode(pixels))
        (tmp_path / "labels.idx").write_bytes(adapter.encode(np.array([0, 1, 0, 1], dtype=np.uint8)))
        data = load_idx_pair(str(tmp_path / "images.idx"), str(tmp_path / "labels.idx"), 2)
        assert data.images.shape == (4, 1, 3, 3)
        np.testing.assert_array_equal(data.images, 1.0)

    def test_idx_label_count_mismatch(self, tmp_path):
        adapter = IdxFormatAdapter()
        (tmp_path / "images.idx").write_bytes(adapter.encode(np.zeros((4, 3, 3), dtype=np.uint8)))
        (tmp_path / "labels.idx").write_bytes(adapter.encode(np.zeros(3, dtype=np.uint8)))
        with pytest.raises(DataError, match="3,"):
            load_idx_pair(str(tmp_path / "images.idx"), str(tmp_path / "labels.idx"), 2)

    def test_raw_label_out_of_range(self, tmp_path):
        data = RawRecordFormatAdapter().encode((np.zeros((2, 1, 2, 2)), np.array([0, 7])))
        (tmp_path / "records.bin").write_bytes(data)
        with pytest.raises(DataError, match="Labels must lie"):
            load_raw_records(str(tmp_path / "records.bin"), (1, 2, 2), 2)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileOperationError):
            load_raw_records(str(tmp_path / "absent.bin"), (1, 2, 2), 2)


class TestLoadDataset:
    """Test the configured pipeline entry point."""

    def test_blobs_split(self):
        cfg = load_config(overrides=["dataset.samples=40", "dataset.image_size=4"])
        split = load_dataset(cfg)
        assert len(split.train) == 30
        assert len(split.test) == 10
        assert len(split.mean) == 1
        assert split.fingerprint == fingerprint(split.train)

    def test_idx_needs_paths(self):
        cfg = load_config(overrides=["dataset.kind=idx"])
        with pytest.raises(ConfigError, match="dataset.path"):
            load_dataset(cfg)
