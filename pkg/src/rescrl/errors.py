"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: configuration problems exit 2,
numerical failures exit 3.
"""


class RescrlError(Exception):
    """Base class for all package errors."""


class ConfigError(RescrlError):
    """Invalid configuration, environment spec, or out-of-domain argument."""


class NumericalError(RescrlError):
    """A solver produced a result outside its certified tolerance."""


class LpSolverError(NumericalError):
    """The dense simplex failed (degenerate basis, unbounded, pivot cap)."""


class OracleDiagnosticsError(NumericalError):
    """Primal and dual oracle paths disagree beyond the diagnostic bound."""
