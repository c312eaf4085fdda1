"""IDX files (the MNIST layout): big-endian header, row-major payload.

Magic: two zero bytes, a type code and the number of dimensions, e.g.
``0x00000803`` for a 3-D unsigned-byte image stack and ``0x00000801`` for labels.
"""

from __future__ import annotations

import math
import struct

import numpy as np

from nsdlab.core.exceptions import DataFormatError
from nsdlab.core.types import DecodeOptions

from .base import BaseFormatAdapter


_TYPE_CODES: dict[int, np.dtype] = {
    0x08: np.dtype("u1"),
    0x09: np.dtype("i1"),
    0x0B: np.dtype(">i2"),
    0x0C: np.dtype(">i4"),
    0x0D: np.dtype(">f4"),
    0x0E: np.dtype(">f8"),
}


class IdxFormatAdapter(BaseFormatAdapter):
    """Adapter for IDX image and label files."""

    def __init__(self) -> None:
        super().__init__("idx")

    def encode(self, data: np.ndarray) -> bytes:
        array = np.asarray(data)
        for code, dtype in _TYPE_CODES.items():
            if array.dtype.kind == dtype.kind and array.dtype.itemsize == dtype.itemsize:
                break
        else:
            msg = f"IDX cannot store dtype {array.dtype}"
            raise DataFormatError(msg)
        header = bytes([0, 0, code, array.ndim]) + struct.pack(f">{array.ndim}I", *array.shape)
        return header + np.ascontiguousarray(array, dtype=_TYPE_CODES[code]).tobytes()

    def decode(self, data: bytes, options: DecodeOptions | None = None) -> np.ndarray:
        """Decode an IDX payload into an array of its declared shape.

        Raises:
            DataFormatError: Naming the byte offset of the first problem
        """
        self._need(data, 0, 4, "magic")
        if data[0] != 0 or data[1] != 0:
            raise self._fail(0, f"bad magic 0x{int.from_bytes(data[:4], 'big'):08x}")
        code, ndim = data[2], data[3]
        if code not in _TYPE_CODES:
            raise self._fail(2, f"unknown type code 0x{code:02x}")
        if ndim < 1:
            raise self._fail(3, "zero dimensions")
        self._need(data, 4, 4 * ndim, "dimension sizes")
        shape = struct.unpack_from(f">{ndim}I", data, 4)
        offset = 4 + 4 * ndim
        dtype = _TYPE_CODES[code]
        size = dtype.itemsize * math.prod(shape)
        self._need(data, offset, size, "payload")
        if offset + size != len(data):
            raise self._fail(offset + size, f"{len(data) - offset - size} trailing bytes")
        return np.frombuffer(data, dtype=dtype, count=math.prod(shape), offset=offset).reshape(shape).copy()


def images_from_idx(array: np.ndarray) -> np.ndarray:
    """``(N, H, W)`` -> ``(N, 1, H, W)``; ``(N, H, W, C)`` -> ``(N, C, H, W)``."""
    if array.ndim == 3:
        return array[:, None, :, :]
    if array.ndim == 4:
        return np.transpose(array, (0, 3, 1, 2))
    msg = f"IDX image stacks must be 3-D or 4-D, got shape {array.shape}"
    raise DataFormatError(msg)
