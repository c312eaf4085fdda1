"""Utilities module."""

from .concurrency import ordered_map, worker_count
from .io import append_line, read_bytes, truncate_lines, write_bytes, write_text
from .validation import validate_file_exists, validate_image_batch, validate_labels


__all__ = [
    "append_line",
    "ordered_map",
    "read_bytes",
    "truncate_lines",
    "validate_file_exists",
    "validate_image_batch",
    "validate_labels",
    "worker_count",
    "write_bytes",
    "write_text",
]
