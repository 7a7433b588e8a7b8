"""
Domain exceptions shared by all feature modules.

Two families map to the two failure classes the CLI and API distinguish:
- InputValidationError: the caller handed us something unusable (exit code 2, HTTP 422)
- NumericalError: the linear algebra failed on input that looked valid (exit code 3, HTTP 500)
"""


class PolarizationError(Exception):
    """Base class for every error raised by this package."""


class InputValidationError(PolarizationError):
    """Malformed or inconsistent input."""


class EdgeListParseError(InputValidationError):
    """A line of an edge-list file could not be parsed."""

    def __init__(self, line_number: int, line: str, reason: str):
        self.line_number = line_number
        self.line = line
        self.reason = reason
        super().__init__(f"line {line_number}: {reason} ({line.strip()!r})")


class DuplicateCandidateError(InputValidationError):
    """A candidate edge was added twice to the same grounded system."""


class CapacityError(InputValidationError):
    """A dense or exhaustive computation was requested above its configured cap."""


class StabilityError(InputValidationError):
    """The simulation step exceeds the explicit-Euler stability bound."""

    def __init__(self, dt: float, bound: float):
        self.dt = dt
        self.bound = bound
        self.suggested_dt = 0.1 * bound
        super().__init__(
            f"dt={dt:.6g} is not below the stability bound {bound:.6g}; "
            f"try dt={self.suggested_dt:.6g}"
        )


class NumericalError(PolarizationError):
    """Factorization or solve failure, usually a non positive definite system."""


class ConvergenceError(NumericalError):
    """The iterative solver stopped at its iteration cap above tolerance."""

    def __init__(self, residual: float, iterations: int, probe_index: int | None = None):
        self.residual = residual
        self.iterations = iterations
        self.probe_index = probe_index
        where = f" (probe {probe_index})" if probe_index is not None else ""
        super().__init__(
            f"solver did not converge after {iterations} iterations{where}: "
            f"relative residual {residual:.3e}"
        )

    def at_probe(self, probe_index: int) -> "ConvergenceError":
        """Return a copy tagged with the probe that failed."""
        return ConvergenceError(self.residual, self.iterations, probe_index)
