"""Integration tests for the nsdlab command line."""
