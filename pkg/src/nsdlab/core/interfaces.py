"""Abstract base classes for nsdlab.

File formats follow the Strategy and Adapter patterns: each binary format
is one :class:`FormatAdapter`, looked up by name in
:data:`nsdlab.core.registry.registry`.
"""

from abc import ABC, abstractmethod
from typing import Any

from .types import DecodeOptions


class FormatAdapter(ABC):
    """Abstract base class for binary file format adapters."""

    @property
    @abstractmethod
    def format_name(self) -> str:
        """Return the format name (e.g. 'nsdt', 'idx').

        Returns:
            Format identifier string
        """

    @abstractmethod
    def encode(self, data: Any) -> bytes:
        """Encode data to this format.

        Args:
            data: Format-specific payload (arrays, records, ...)

        Returns:
            Encoded bytes

        Raises:
            DataFormatError: If the payload cannot be represented
        """

    @abstractmethod
    def decode(self, data: bytes, options: DecodeOptions | None = None) -> Any:
        """Decode bytes in this format.

        Args:
            data: Raw file contents
            options: Decoding options

        Returns:
            Decoded payload

        Raises:
            DataFormatError: If the bytes do not match the format; the message
                names the byte offset of the first problem
        """
