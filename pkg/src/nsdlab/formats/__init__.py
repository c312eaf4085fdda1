"""Binary file format adapters."""

from .base import BaseFormatAdapter
from .container import ContainerFormatAdapter, load_container, save_container
from .idx import IdxFormatAdapter, images_from_idx
from .pnm import PnmFormatAdapter
from .raw import RawRecordFormatAdapter


__all__ = [
    "BaseFormatAdapter",
    "ContainerFormatAdapter",
    "IdxFormatAdapter",
    "PnmFormatAdapter",
    "RawRecordFormatAdapter",
    "images_from_idx",
    "load_container",
    "register_default_formats",
    "save_container",
]


def register_default_formats() -> None:
    """Register the built-in adapters with the global registry (idempotent)."""
    from nsdlab.core.registry import registry

    def register_if_not_exists(name: str, adapter: BaseFormatAdapter) -> None:
        if not registry.is_supported(name):
            registry.register(name, adapter)

    register_if_not_exists("nsdt", ContainerFormatAdapter())
    register_if_not_exists("idx", IdxFormatAdapter())
    register_if_not_exists("raw", RawRecordFormatAdapter())
    register_if_not_exists("pnm", PnmFormatAdapter())
