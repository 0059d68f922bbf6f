"""Exception hierarchy. Each class maps to a distinct CLI exit code."""


class HyperscatterError(Exception):
    exit_code = 1


class ParameterError(HyperscatterError, ValueError):
    """A physical parameter or configuration value violates a constraint."""

    exit_code = 2


class ConvergenceError(HyperscatterError, ArithmeticError):
    """Root finding, quadrature, ODE integration or extrapolation failed."""

    exit_code = 3


class ResonanceError(HyperscatterError, ArithmeticError):
    """Evaluation hit a pole of the matching formula (J1(q r0) = 0)."""

    exit_code = 4


class ExtractionError(HyperscatterError):
    """Amplitude extraction is unstable under a change of fit window."""

    exit_code = 5


class NearResonanceWarning(UserWarning):
    """The amplitude is close to the unitarity circle."""
