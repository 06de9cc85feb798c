"""Exception types shared across the package."""


class DomainError(ValueError):
    """An input lies outside the domain where an operation is defined."""


class DegenerateInputError(ValueError):
    """The input is valid but degenerate (e.g. a constant profile)."""


class NumericError(FloatingPointError):
    """A non-finite value appeared during evaluation."""

    def __init__(self, message, location=None):
        super().__init__(message if location is None else f"{message} at {location}")
        self.location = location


class ConvergenceError(RuntimeError):
    """An iterative procedure stopped before meeting its tolerance.

    ``best`` carries the best iterate found so far (if any) and
    ``diagnostics`` a dict of scalar histories useful for post-mortems.
    """

    def __init__(self, message, best=None, diagnostics=None):
        super().__init__(message)
        self.best = best
        self.diagnostics = diagnostics or {}


class WindowTooSmallError(DomainError):
    """The computational window cannot contain the wave for the requested run."""
