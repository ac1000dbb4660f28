"""Pydantic schemas for parameters, policies, experiments and run records."""
