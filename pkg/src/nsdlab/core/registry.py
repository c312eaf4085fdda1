"""Name -> adapter lookup for the binary file formats.

One module-level :data:`registry` is shared by the whole process; expert
training and evaluation repeats may read files from worker threads, so every
access holds a lock.
"""

from __future__ import annotations

import threading

from .exceptions import FormatNotSupportedError
from .interfaces import FormatAdapter


class FormatRegistry:
    """Case-insensitive mapping of format names to adapters."""

    def __init__(self) -> None:
        self._adapters: dict[str, FormatAdapter] = {}
        self._lock = threading.RLock()

    def register(self, format_name: str, adapter: FormatAdapter) -> None:
        """Add an adapter under ``format_name``.

        Raises:
            ValueError: If the name is empty or already taken
            TypeError: If ``adapter`` is not a FormatAdapter
        """
        if not format_name:
            msg = "Format name cannot be empty"
            raise ValueError(msg)
        if not isinstance(adapter, FormatAdapter):
            msg = f"Adapter must be a FormatAdapter instance, got {type(adapter)}"  # type: ignore[unreachable]
            raise TypeError(msg)
        key = format_name.lower()
        with self._lock:
            if key in self._adapters:
                msg = f"Format '{key}' is already registered"
                raise ValueError(msg)
            self._adapters[key] = adapter

    def get(self, format_name: str) -> FormatAdapter:
        """Adapter for ``format_name``.

        Raises:
            FormatNotSupportedError: If nothing is registered under that name
        """
        key = (format_name or "").lower()
        with self._lock:
            adapter = self._adapters.get(key)
            if adapter is None:
                msg = f"Format '{key}' is not supported. Available formats: {', '.join(sorted(self._adapters))}"
                raise FormatNotSupportedError(msg)
            return adapter

    def unregister(self, format_name: str) -> None:
        key = format_name.lower()
        with self._lock:
            if self._adapters.pop(key, None) is None:
                msg = f"Format '{key}' is not registered"
                raise FormatNotSupportedError(msg)

    def list_formats(self) -> list[str]:
        with self._lock:
            return sorted(self._adapters)

    def is_supported(self, format_name: str) -> bool:
        with self._lock:
            return bool(format_name) and format_name.lower() in self._adapters

    def clear(self) -> None:
        """Drop every adapter (tests only)."""
        with self._lock:
            self._adapters.clear()


registry = FormatRegistry()


def get_registry() -> FormatRegistry:
    """The shared registry, with the built-in formats registered."""
    from nsdlab.formats import register_default_formats  # noqa: PLC0415

    register_default_formats()
    return registry
