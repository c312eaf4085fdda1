"""Tests for the format registry and the exception hierarchy."""

import pytest

from nsdlab.core import exceptions
from nsdlab.core.exceptions import FormatNotSupportedError, NsdLabError
from nsdlab.core.registry import FormatRegistry, get_registry, registry
from nsdlab.formats import IdxFormatAdapter, PnmFormatAdapter


class TestRegistry:
    """Test adapter registration and lookup."""

    def test_fresh_registry_is_empty(self):
        fresh = FormatRegistry()
        assert fresh.list_formats() == []
        assert not fresh.is_supported("")
        fresh.register("pnm", PnmFormatAdapter())
        assert fresh.is_supported("PNM")
        assert registry.is_supported("pnm")

    def test_defaults_registered(self):
        assert registry.list_formats() == ["idx", "nsdt", "pnm", "raw"]

    def test_lookup_is_case_insensitive(self):
        assert isinstance(registry.get("IDX"), IdxFormatAdapter)

    def test_unknown_format(self):
        with pytest.raises(FormatNotSupportedError, match="Available formats"):
            registry.get("png")

    def test_duplicate_registration(self):
        with pytest.raises(ValueError, match="already registered"):
            registry.register("pnm", PnmFormatAdapter())

    def test_non_adapter_rejected(self):
        with pytest.raises(TypeError):
            registry.register("other", object())  # type: ignore[arg-type]

    def test_unregister(self):
        registry.unregister("pnm")
        assert not registry.is_supported("pnm")
        with pytest.raises(FormatNotSupportedError):
            registry.unregister("pnm")

    def test_get_registry_restores_defaults(self):
        registry.clear()
        assert get_registry().is_supported("nsdt")


class TestExitCodes:
    """Test that every error carries its CLI exit code."""

    @pytest.mark.parametrize(
        ("error", "code"),
        [
            (exceptions.ConfigError, 2),
            (exceptions.DimensionError, 2),
            (exceptions.RangeError, 2),
            (exceptions.OracleCapError, 2),
            (exceptions.DataError, 3),
            (exceptions.DataFormatError, 3),
            (exceptions.FileOperationError, 3),
            (exceptions.FingerprintMismatchError, 4),
            (exceptions.SamplingError, 1),
            (exceptions.DegenerateSegmentError, 1),
        ],
    )
    def test_exit_code(self, error, code):
        assert issubclass(error, NsdLabError)
        assert error("boom").exit_code == code
