"""
Exception hierarchy shared by the simulation modules and the CLI.
The CLI maps these onto process exit codes (see cli.EXIT_CODES).
"""


class LevyPassageError(Exception):
    """Base class for every error raised on purpose by this project"""


class ParameterError(LevyPassageError, ValueError):
    """A parameter lies outside the range an operation accepts"""


class DomainError(ParameterError):
    """A function was evaluated outside its domain (e.g. a tail at x <= 0)"""


class UnsupportedParametrizationError(ParameterError):
    """The skewed alpha = 1 stable law, which needs logarithmic centering"""


class RegimeError(ParameterError):
    """A (alpha, kappa, r) combination outside the regime an operation needs"""


class StructuralError(LevyPassageError):
    """Input has the wrong shape: empty paths, empty record collections"""


class ConfigError(LevyPassageError):
    """A run configuration document could not be parsed or validated"""

    def __init__(self, message: str, location: str = None):
        self.location = location
        if location:
            message = f"{location}: {message}"
        super().__init__(message)


class NumericalError(LevyPassageError):
    """A replication produced a non-finite value or a degenerate estimate"""

    def __init__(self, message: str, replication: int = None):
        self.replication = replication
        if replication is not None:
            message = f"{message} (replication {replication})"
        super().__init__(message)


class EstimatorError(NumericalError):
    """Degenerate data for an estimator (e.g. Hill on a constant sample)"""


class CensoringError(NumericalError):
    """Too many replications never left the region before the horizon"""
