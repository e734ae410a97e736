"""Exception types raised across the toolkit."""


class InvalidParameterError(ValueError):
    """A physical or configuration parameter is outside its allowed range."""


class UnknownPresetError(KeyError):
    """Requested device preset does not exist."""


class CalibrationError(RuntimeError):
    """A calibration routine could not reach its target."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class NumericalBlowupError(FloatingPointError):
    """The simulator produced a non-finite field amplitude."""
