"""Exception types shared across the package."""

from __future__ import annotations


class SolitonLabError(Exception):
    """Base class for all package errors."""


class DimensionError(SolitonLabError, ValueError):
    """Tensor shapes or dimensions are inconsistent or unsupported."""


class NotPositiveDefiniteError(SolitonLabError, ValueError):
    pass


class DomainError(SolitonLabError, ValueError):
    """Evaluation point outside (or too close to the edge of) a chart or interval."""


class SingularMetricError(SolitonLabError, ValueError):
    pass


class MissingPotentialError(SolitonLabError, ValueError):
    pass


class DegenerateGradientError(SolitonLabError, ValueError):
    """|grad f| is below threshold, so gradient-based identities are vacuous."""


class SingularPointError(SolitonLabError, ValueError):
    """Quantity undefined at a critical point of the potential (f' = 0)."""


class InvalidStateError(SolitonLabError, ValueError):
    pass


class ScenarioError(SolitonLabError, ValueError):
    """Scenario file violates the schema or an invariant.

    ``field`` names the offending key, ``line`` is the 1-based source line when known.
    """

    def __init__(self, field: str, reason: str, line: int | None = None) -> None:
        self.field = field
        self.reason = reason
        self.line = line
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"{field}: {reason}{where}")
