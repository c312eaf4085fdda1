"""CLI module for nsdlab."""

from .main import cli


__all__ = ["cli"]
