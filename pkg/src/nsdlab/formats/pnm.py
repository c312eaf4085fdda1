"""Binary portable pixmaps: P5 (grayscale) and P6 (RGB), maxval 255."""

from __future__ import annotations

import io

import numpy as np
from PIL import Image, UnidentifiedImageError

from nsdlab.core.exceptions import DataFormatError
from nsdlab.core.types import DecodeOptions

from .base import BaseFormatAdapter


class PnmFormatAdapter(BaseFormatAdapter):
    """Adapter for PGM/PPM images via Pillow."""

    def __init__(self) -> None:
        super().__init__("pnm")

    def encode(self, data: np.ndarray) -> bytes:
        """Encode ``(H, W)`` (P5) or ``(H, W, 3)`` (P6) uint8 pixels."""
        pixels = np.asarray(data)
        if pixels.dtype != np.uint8:
            msg = f"PNM pixels must be uint8, got {pixels.dtype}"
            raise DataFormatError(msg)
        if not (pixels.ndim == 2 or (pixels.ndim == 3 and pixels.shape[2] == 3)):
            msg = f"PNM pixels must be (H, W) or (H, W, 3), got {pixels.shape}"
            raise DataFormatError(msg)
        image = Image.fromarray(np.ascontiguousarray(pixels))
        buffer = io.BytesIO()
        image.save(buffer, format="PPM")
        return buffer.getvalue()

    def decode(self, data: bytes, options: DecodeOptions | None = None) -> np.ndarray:
        if data[:2] not in (b"P5", b"P6"):
            raise self._fail(0, f"expected P5 or P6 header, got {data[:2]!r}")
        try:
            with Image.open(io.BytesIO(data)) as image:
                image.load()
                return np.asarray(image).copy()
        except (UnidentifiedImageError, OSError, ValueError) as e:
            raise self._fail(0, str(e)) from e
