class CodesmoothError(Exception):
    pass


class DomainError(CodesmoothError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class ContractError(CodesmoothError, ValueError):
    """Two operands that must agree (dimension, log base, field) do not."""


class CapacityError(CodesmoothError):
    """The requested computation exceeds the configured dense or enumeration budget."""


class UnsupportedError(CodesmoothError):
    """The operation is not defined for this kind of input."""
