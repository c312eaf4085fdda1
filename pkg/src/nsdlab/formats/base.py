"""Base format adapter implementation."""

from abc import ABC

from nsdlab.core.exceptions import DataFormatError
from nsdlab.core.interfaces import FormatAdapter


class BaseFormatAdapter(FormatAdapter, ABC):
    """Base class for format adapters with common functionality."""

    def __init__(self, format_name: str) -> None:
        self._format_name = format_name

    @property
    def format_name(self) -> str:
        return self._format_name

    def _fail(self, offset: int, problem: str) -> DataFormatError:
        return DataFormatError(f"{self._format_name.upper()} data invalid at byte offset {offset}: {problem}")

    def _need(self, data: bytes, offset: int, count: int, what: str) -> None:
        """Raise if ``data`` holds fewer than ``count`` bytes from ``offset``."""
        if offset + count > len(data):
            raise self._fail(offset, f"truncated {what}: need {count} bytes, {len(data) - offset} left")
