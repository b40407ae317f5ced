"""Exception hierarchy shared by every module in the package."""


class CircuitError(Exception):
    """Base class for all errors raised by this package."""


class OutOfRange(CircuitError, ValueError):
    pass


class ModulusMismatch(CircuitError, ValueError):
    pass


class NotInvertible(CircuitError, ZeroDivisionError):
    pass


class ShapeError(CircuitError, ValueError):
    pass


class ValidationError(CircuitError, ValueError):
    pass


class MalformedAssignment(ValidationError):
    """The assignment does not start with the constant 1."""


class ParseError(CircuitError, ValueError):
    def __init__(self, message, location=None):
        if location is not None:
            message = f"{message} (at {location})"
        super().__init__(message)
        self.location = location


class StateError(CircuitError, RuntimeError):
    pass


class UnknownVariable(CircuitError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else "unknown variable"


class SpecError(CircuitError, ValueError):
    pass


class WitnessError(CircuitError, ValueError):
    pass
