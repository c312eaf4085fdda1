"""Raw labeled records: one u8 label followed by C*H*W little-endian float32 pixels."""

from __future__ import annotations

import math

import numpy as np

from nsdlab.core.exceptions import DataFormatError
from nsdlab.core.types import DecodeOptions

from .base import BaseFormatAdapter


class RawRecordFormatAdapter(BaseFormatAdapter):
    """Adapter for fixed-size raw image records."""

    def __init__(self) -> None:
        super().__init__("raw")

    def encode(self, data: tuple[np.ndarray, np.ndarray]) -> bytes:
        """Encode ``(images (N, C, H, W), labels (N,))``."""
        images, labels = data
        labels = np.asarray(labels)
        if labels.size and (labels.min() < 0 or labels.max() > 255):
            msg = "Raw records store labels as one unsigned byte (0..255)"
            raise DataFormatError(msg)
        n = images.shape[0]
        pixels = np.ascontiguousarray(images, dtype="<f4").reshape(n, -1)
        record = np.dtype([("label", "u1"), ("pixels", "<f4", (pixels.shape[1],))])
        out = np.empty(n, dtype=record)
        out["label"] = labels
        out["pixels"] = pixels
        return out.tobytes()

    def decode(self, data: bytes, options: DecodeOptions | None = None) -> tuple[np.ndarray, np.ndarray]:
        """Decode records into ``(images float32 (N, C, H, W), labels int64)``.

        Raises:
            DataFormatError: If the record shape is missing or the file ends mid-record
        """
        if options is None or options.record_shape is None:
            msg = "Raw records need a record shape (channels, H, W) to decode"
            raise DataFormatError(msg)
        shape = tuple(options.record_shape)
        record_size = 1 + 4 * math.prod(shape)
        n, remainder = divmod(len(data), record_size)
        if remainder:
            raise self._fail(n * record_size, f"truncated record: {remainder} of {record_size} bytes")
        if n == 0:
            raise self._fail(0, "no records")
        record = np.dtype([("label", "u1"), ("pixels", "<f4", (math.prod(shape),))])
        parsed = np.frombuffer(data, dtype=record, count=n)
        images = parsed["pixels"].reshape((n, *shape)).astype(np.float32)
        return images, parsed["label"].astype(np.int64)
