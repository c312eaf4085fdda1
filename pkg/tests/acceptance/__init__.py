"""Whole-run checks on the blob desk task."""
