"""Flat parameter vectors with a named layout."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from nsdlab.core.exceptions import ContractViolationError
from nsdlab.diffmath import Node, ops


@dataclass(frozen=True)
class ParamEntry:
    name: str
    offset: int
    shape: tuple[int, ...]

    @property
    def size(self) -> int:
        return math.prod(self.shape)


@dataclass(frozen=True)
class ParamLayout:
    """Ordered table ``name -> (offset, shape)`` over one flat vector."""

    entries: tuple[ParamEntry, ...]

    @classmethod
    def from_shapes(cls, shapes: list[tuple[str, tuple[int, ...]]]) -> ParamLayout:
        entries = []
        offset = 0
        for name, shape in shapes:
            entries.append(ParamEntry(name, offset, tuple(shape)))
            offset += math.prod(shape)
        return cls(tuple(entries))

    @property
    def size(self) -> int:
        if not self.entries:
            return 0
        last = self.entries[-1]
        return last.offset + last.size

    @property
    def names(self) -> list[str]:
        return [e.name for e in self.entries]

    def __getitem__(self, name: str) -> ParamEntry:
        for entry in self.entries:
            if entry.name == name:
                return entry
        raise KeyError(name)

    def to_dict(self) -> list[dict[str, Any]]:
        return [{"name": e.name, "offset": e.offset, "shape": list(e.shape)} for e in self.entries]

    @classmethod
    def from_dict(cls, data: list[dict[str, Any]]) -> ParamLayout:
        return cls(tuple(ParamEntry(d["name"], int(d["offset"]), tuple(d["shape"])) for d in data))


@dataclass(frozen=True)
class ParamVector:
    """Network parameters as one flat float64 vector plus its layout."""

    values: np.ndarray
    layout: ParamLayout

    def __post_init__(self) -> None:
        flat = np.array(self.values, dtype=np.float64).reshape(-1)
        if flat.size != self.layout.size:
            msg = f"Parameter vector has {flat.size} entries, layout expects {self.layout.size}"
            raise ContractViolationError(msg)
        flat.flags.writeable = False
        object.__setattr__(self, "values", flat)

    @classmethod
    def flatten(cls, arrays: dict[str, np.ndarray], layout: ParamLayout) -> ParamVector:
        parts = [np.asarray(arrays[e.name], dtype=np.float64).reshape(-1) for e in layout.entries]
        return cls(np.concatenate(parts) if parts else np.zeros(0), layout)

    def unflatten(self) -> dict[str, np.ndarray]:
        return {e.name: self.values[e.offset : e.offset + e.size].reshape(e.shape) for e in self.layout.entries}

    def with_values(self, values: np.ndarray) -> ParamVector:
        return ParamVector(values, self.layout)

    def as_node(self, trainable: bool = False) -> Node:
        return Node.leaf(self.values, trainable=trainable, name="theta")

    def __len__(self) -> int:
        return int(self.values.size)


def unflatten_node(theta: Node, layout: ParamLayout) -> dict[str, Node]:
    """Differentiable views of each named parameter in a flat node."""
    if theta.shape != (layout.size,):
        msg = f"Flat parameters of shape {theta.shape} do not match a layout of size {layout.size}"
        raise ContractViolationError(msg)
    return {
        e.name: ops.reshape(ops.slice_rows(theta, e.offset, e.offset + e.size), e.shape) for e in layout.entries
    }


def check_same_layout(a: ParamVector, b: ParamVector) -> None:
    if a.layout != b.layout:
        msg = "Parameter vectors have different layouts"
        raise ContractViolationError(msg)
