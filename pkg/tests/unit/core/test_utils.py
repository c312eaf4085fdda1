"""Tests for file, validation and thread-pool helpers."""

import threading

import numpy as np
import pytest

from nsdlab.core.exceptions import DataError, DimensionError, FileOperationError
from nsdlab.utils import (
    append_line,
    ordered_map,
    read_bytes,
    truncate_lines,
    validate_file_exists,
    validate_image_batch,
    validate_labels,
    worker_count,
    write_text,
)


class TestIO:
    """Test file helpers."""

    def test_write_creates_parents(self, tmp_path):
        target = tmp_path / "a" / "b" / "c.txt"
        write_text(target, "hello")
        assert read_bytes(target) == b"hello"

    def test_read_missing(self, tmp_path):
        with pytest.raises(FileOperationError, match="Failed to read"):
            read_bytes(tmp_path / "missing.bin")

    def test_append_and_truncate(self, tmp_path):
        log = tmp_path / "log.jsonl"
        for k in range(5):
            append_line(log, f"{k}\n")
        assert truncate_lines(log, 2) == 3
        assert log.read_text(encoding="utf-8") == "0\n1\n"

    def test_truncate_missing_file(self, tmp_path):
        assert truncate_lines(tmp_path / "none", 3) == 0


class TestValidation:
    """Test input validators."""

    def test_file_exists(self, tmp_path):
        with pytest.raises(FileOperationError, match="not found"):
            validate_file_exists(tmp_path / "x")
        with pytest.raises(FileOperationError, match="not a file"):
            validate_file_exists(tmp_path)

    def test_image_batch(self):
        with pytest.raises(DimensionError):
            validate_image_batch(np.zeros((2, 2)))
        with pytest.raises(DimensionError, match="empty"):
            validate_image_batch(np.zeros((0, 1, 2, 2)))
        with pytest.raises(DataError):
            validate_image_batch(np.full((1, 1, 2, 2), np.nan))

    def test_labels(self):
        np.testing.assert_array_equal(validate_labels(np.array([0, 1]), 2), [0, 1])
        with pytest.raises(DataError, match="Labels must lie"):
            validate_labels(np.array([0, 2]), 2)


class TestConcurrency:
    """Test the ordered thread pool."""

    def test_worker_count_from_env(self, monkeypatch):
        monkeypatch.setenv("NSD_THREADS", "4")
        assert worker_count() == 4
        monkeypatch.setenv("NSD_THREADS", "zero")
        assert worker_count(default=2) == 2
        monkeypatch.setenv("NSD_THREADS", "-3")
        assert worker_count() == 1

    def test_inline_when_single_worker(self):
        seen = []
        ordered_map(lambda x: seen.append(threading.get_ident()), range(3))
        assert set(seen) == {threading.get_ident()}

    def test_order_preserved_with_threads(self):
        assert ordered_map(lambda x: x * x, range(20), workers=4) == [x * x for x in range(20)]
