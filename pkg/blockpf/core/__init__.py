"""Core settings and errors."""
