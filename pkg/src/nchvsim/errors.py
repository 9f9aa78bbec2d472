"""Exception types shared across the package.

Everything derives from SimulationError so the command-line front end can
map any domain failure to a single exit code while argparse keeps usage
errors separate.
"""

from __future__ import annotations


class SimulationError(Exception):
    """Base class for all domain errors raised by this package."""


class StructureError(SimulationError):
    """Tensor-structure mismatch: colliding slots, wrong space, bad label."""


class ValidationError(SimulationError):
    """An argument violates a documented precondition."""


class EstimationError(SimulationError):
    """A statistical estimate cannot be formed (e.g. zero usable events)."""


class EnumerationLimitError(SimulationError):
    """An exhaustive enumeration would exceed the supported problem size."""


class FixtureParseError(SimulationError):
    """A replay input file is malformed.  Carries the offending line number."""

    def __init__(self, line_number: int, message: str):
        self.line_number = line_number
        super().__init__(f"line {line_number}: {message}")
