"""
Error hierarchy for blockpf.

Library code raises these; the CLI maps them to exit codes.
"""

from typing import Any, Optional


class BlockPFError(Exception):
    """Base class for all blockpf errors."""


class InvalidCountError(BlockPFError, ValueError):
    """A particle, sample or fictitious-observation count is below 1."""


class DomainError(BlockPFError, ValueError):
    """A statistic lies outside its admissible range."""


class UnsupportedModelError(BlockPFError):
    """The model has no closed-form observation CDF."""


class ConfigError(BlockPFError):
    """An experiment recipe could not be loaded or validated."""


class FilterDivergenceError(BlockPFError):
    """
    Every particle received zero (or non-finite) likelihood.

    Attributes:
        t: time index at which the weights collapsed
        trace: the RunTrace recorded up to the failure, when raised from the
            adaptive loop
    """

    def __init__(self, message: str, t: Optional[int] = None, trace: Any = None):
        super().__init__(message)
        self.t = t
        self.trace = trace
