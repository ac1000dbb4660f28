"""Filtering, diagnostics, adaptation, oracle and harness services."""
