class DomainError(ValueError):
    """An input lies outside the domain of a model or procedure."""


class ValidationError(ValueError):
    """Input data (files, rows, profiles) failed validation."""


class CollinearityError(ArithmeticError):
    """The regression normal equations are singular or ill-conditioned."""
