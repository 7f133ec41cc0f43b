"""Exception hierarchy shared across the package.

The CLI maps these onto its exit codes: configuration and dimension errors
exit with 2, numerical failures with 4.
"""


class HazardOpsError(Exception):
    pass


class ConfigurationError(HazardOpsError, ValueError):
    pass


class DimensionError(HazardOpsError, ValueError):
    pass


class ParameterError(HazardOpsError, ValueError):
    pass


class StateError(HazardOpsError, RuntimeError):
    pass


class NumericalError(HazardOpsError, ArithmeticError):
    pass


class ConvergenceError(NumericalError):
    pass


class TrainingError(NumericalError):
    pass
