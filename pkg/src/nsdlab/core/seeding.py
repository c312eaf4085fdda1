"""Named random streams derived from one root seed.

Each consumer asks for a stream by purpose label (plus optional integer
indices), so adding a new consumer never shifts the numbers an existing one
receives.
"""

import hashlib

import numpy as np

from nsdlab.core.exceptions import RangeError


def _spawn_key(purpose: str, index: tuple[int, ...]) -> tuple[int, ...]:
    digest = hashlib.sha256(purpose.encode("utf-8")).digest()
    label = tuple(int.from_bytes(digest[i : i + 4], "little") for i in range(0, 16, 4))
    return label + tuple(int(i) for i in index)


class SeedStreams:
    """Splitter turning a 64-bit root seed into independent generators."""

    def __init__(self, root_seed: int) -> None:
        if root_seed < 0:
            msg = f"Root seed must be non-negative, got {root_seed}"
            raise RangeError(msg)
        self.root_seed = int(root_seed) & 0xFFFFFFFFFFFFFFFF

    def sequence(self, purpose: str, *index: int) -> np.random.SeedSequence:
        """Return the seed sequence for a named stream."""
        return np.random.SeedSequence(self.root_seed, spawn_key=_spawn_key(purpose, index))

    def generator(self, purpose: str, *index: int) -> np.random.Generator:
        """Return a fresh generator for a named stream.

        Args:
            purpose: Stream label, e.g. ``"distill"`` or ``"eval"``
            *index: Optional integer indices (step, repeat, ...)

        Returns:
            A new numpy Generator; equal arguments give equal streams
        """
        return np.random.default_rng(self.sequence(purpose, *index))

    def integer_seed(self, purpose: str, *index: int) -> int:
        """Return a 32-bit integer seed for APIs that take plain ints."""
        return int(self.sequence(purpose, *index).generate_state(1)[0])

    def __repr__(self) -> str:
        return f"SeedStreams(root_seed={self.root_seed})"
