"""Exception hierarchy shared by all modules.

Three error families map onto the CLI exit codes: configuration problems
(exit 2), numerical failures such as degenerate spectra (exit 3), and
budget overruns such as the convolution atom cap (exit 4).
"""


class ConfigError(ValueError):
    """Invalid configuration or malformed input."""


class NumericalError(RuntimeError):
    """A computation reached a state the theory rules out or cannot certify."""


class BudgetError(RuntimeError):
    """A configured resource cap was exceeded."""


class InvalidElementError(ConfigError):
    """Matrix is not renormalizable to unit determinant (det <= 0 or non-finite)."""


class AtomCapError(BudgetError):
    """Exact convolution would exceed the configured atom cap."""


class DegenerateSpectrumError(NumericalError):
    """Top eigenvalue is not simple at this truncation."""


class ContinuationError(NumericalError):
    """Eigenvalue branch tracking became ambiguous at some frequency."""

    def __init__(self, r, message=None):
        self.r = r
        super().__init__(message or f"branch continuation ambiguous at r = {r}")


class FixedPointError(NumericalError):
    """No simple eigenvalue close enough to 1 for the stationary density."""


class CalibrationError(NumericalError):
    """Two evaluation routes disagree beyond tolerance (normalization suspect)."""
