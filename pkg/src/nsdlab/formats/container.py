"""NSDT tensor container: named arrays and metadata records in one file.

Layout (all integers little-endian)::

    "NSDT" | version u16 | record count u32 | records...
    record: name length u16 | UTF-8 name | rank u8 | extents u32 x rank
            | dtype tag u8 | payload (row-major)

Dtype tags: 0 float32, 1 float64, 2 UTF-8 JSON metadata (bytes), 3 int64.
"""

from __future__ import annotations

import json
import math
import struct
from pathlib import Path
from typing import Any

import numpy as np

from nsdlab.core.exceptions import DataFormatError
from nsdlab.core.types import DecodeOptions
from nsdlab.utils.io import read_bytes, write_bytes

from .base import BaseFormatAdapter


MAGIC = b"NSDT"
VERSION = 1

TAG_F32 = 0
TAG_F64 = 1
TAG_JSON = 2
TAG_I64 = 3

_DTYPES: dict[int, np.dtype] = {
    TAG_F32: np.dtype("<f4"),
    TAG_F64: np.dtype("<f8"),
    TAG_JSON: np.dtype("u1"),
    TAG_I64: np.dtype("<i8"),
}

Record = np.ndarray | dict[str, Any]


def _tag_for(array: np.ndarray) -> int:
    if array.dtype == np.float32:
        return TAG_F32
    if array.dtype == np.float64:
        return TAG_F64
    if np.issubdtype(array.dtype, np.integer) or array.dtype == np.bool_:
        return TAG_I64
    msg = f"Unsupported array dtype {array.dtype} for the NSDT container"
    raise DataFormatError(msg)


class ContainerFormatAdapter(BaseFormatAdapter):
    """Adapter for NSDT tensor containers."""

    def __init__(self) -> None:
        super().__init__("nsdt")

    def encode(self, data: dict[str, Record]) -> bytes:
        """Encode named arrays (and dict metadata records).

        Raises:
            DataFormatError: On a non-string name or an unsupported dtype
        """
        chunks = [MAGIC, struct.pack("<HI", VERSION, len(data))]
        for name, record in data.items():
            if not isinstance(name, str) or not name:
                msg = f"Record names must be non-empty strings, got {name!r}"
                raise DataFormatError(msg)
            encoded_name = name.encode("utf-8")
            if isinstance(record, dict):
                payload = np.frombuffer(json.dumps(record, sort_keys=True).encode("utf-8"), dtype=np.uint8)
                tag = TAG_JSON
            else:
                array = np.asarray(record)
                tag = _tag_for(array)
                payload = np.ascontiguousarray(array, dtype=_DTYPES[tag])
            chunks.append(struct.pack("<H", len(encoded_name)))
            chunks.append(encoded_name)
            chunks.append(struct.pack("<B", payload.ndim))
            chunks.append(struct.pack(f"<{payload.ndim}I", *payload.shape))
            chunks.append(struct.pack("<B", tag))
            chunks.append(payload.tobytes())
        return b"".join(chunks)

    def decode(self, data: bytes, options: DecodeOptions | None = None) -> dict[str, Record]:
        """Decode a container into ``name -> array`` (metadata records as dicts).

        Raises:
            DataFormatError: Naming the byte offset of the first problem
        """
        self._need(data, 0, 10, "header")
        if data[:4] != MAGIC:
            raise self._fail(0, f"bad magic {data[:4]!r}, expected {MAGIC!r}")
        version, count = struct.unpack_from("<HI", data, 4)
        if version != VERSION:
            raise self._fail(4, f"unsupported version {version}")
        offset = 10
        records: dict[str, Record] = {}
        for _ in range(count):
            self._need(data, offset, 2, "name length")
            (name_len,) = struct.unpack_from("<H", data, offset)
            offset += 2
            self._need(data, offset, name_len, "name")
            try:
                name = data[offset : offset + name_len].decode("utf-8")
            except UnicodeDecodeError as e:
                raise self._fail(offset, "record name is not UTF-8") from e
            if name in records:
                raise self._fail(offset, f"duplicate record name '{name}'")
            offset += name_len
            self._need(data, offset, 1, "rank")
            rank = data[offset]
            offset += 1
            self._need(data, offset, 4 * rank, "extents")
            extents = struct.unpack_from(f"<{rank}I", data, offset)
            offset += 4 * rank
            self._need(data, offset, 1, "dtype tag")
            tag = data[offset]
            if tag not in _DTYPES:
                raise self._fail(offset, f"unknown dtype tag {tag}")
            offset += 1
            dtype = _DTYPES[tag]
            size = dtype.itemsize * math.prod(extents)
            self._need(data, offset, size, f"payload of '{name}'")
            raw = data[offset : offset + size]
            if tag == TAG_JSON:
                try:
                    records[name] = json.loads(raw.decode("utf-8"))
                except (UnicodeDecodeError, json.JSONDecodeError) as e:
                    raise self._fail(offset, f"metadata record '{name}' is not JSON") from e
            else:
                records[name] = np.frombuffer(raw, dtype=dtype).reshape(extents).copy()
            offset += size
        if offset != len(data):
            raise self._fail(offset, f"{len(data) - offset} trailing bytes")
        return records


_adapter = ContainerFormatAdapter()


def save_container(path: str | Path, records: dict[str, Record]) -> Path:
    """Write records to ``path``.

    Raises:
        FileOperationError: If the file cannot be written
    """
    target = Path(path)
    write_bytes(target, _adapter.encode(records))
    return target


def load_container(path: str | Path) -> dict[str, Record]:
    """Read a container file.

    Raises:
        FileOperationError: If the file cannot be read
        DataFormatError: If its contents are malformed
    """
    return _adapter.decode(read_bytes(path))
