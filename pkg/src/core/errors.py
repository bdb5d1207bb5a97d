"""
Exception types for the condensation laboratory.

The CLI maps these onto exit codes: ParameterError (and DomainError) -> 2,
CapExceededError -> 3.
"""


class ParameterError(ValueError):
    """Invalid or infeasible parameters."""


class DomainError(ParameterError):
    """Argument outside the domain of a rate function."""


class CapExceededError(RuntimeError):
    """An exact enumeration was refused because the instance is too large."""

    def __init__(self, n: int, cap: int, what: str = "enumeration"):
        self.n = n
        self.cap = cap
        super().__init__(
            f"{what} refused: n={n} exceeds the enumeration cap of {cap} vertices; "
            f"use the Monte-Carlo scans (scan-condensation, scan-cluster) for larger instances"
        )


class TimeBudgetExceeded(RuntimeError):
    """A computation passed its deadline and was abandoned."""
