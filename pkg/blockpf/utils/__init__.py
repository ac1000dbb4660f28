"""Logging and recipe loading utilities."""
