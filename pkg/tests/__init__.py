"""Tests for nsdlab."""
