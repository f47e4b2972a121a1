"""Error types shared across the package."""


class ContractViolation(ValueError):
    """An argument broke a documented precondition (wrong shape, bad value)."""


class UnknownSensingConfig(ContractViolation):
    """A sensing configuration k was requested that the variance map does not hold."""


class NumericalDegeneracy(ArithmeticError):
    """A covariance stopped being invertible even after regularization."""


class ConfigError(ValueError):
    """An experiment config file is malformed or contains unknown keys."""


class CkmFormatError(ValueError):
    """A variance-map grid file or samples file could not be parsed."""
