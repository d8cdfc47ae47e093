"""Exception types shared across the package."""


class CpcpError(Exception):
    """Base class for all package errors."""


class ValidationError(CpcpError):
    """Bad inputs, files, or configuration. CLI exit code 2."""


class NumericalError(CpcpError):
    """Numerical failure (singular system, no signal, ...). CLI exit code 1."""


class DegenerateGraphError(NumericalError):
    """A graph row has zero degree where positive degree is required."""
