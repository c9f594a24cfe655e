"""Exceptions raised by conley_lab.

Validation errors signal bad input (exit code 2 of the command line tool),
numerical errors signal a computation that could not be carried out to the
requested accuracy (exit code 3).
"""


class ConleyLabError(Exception):
    pass


class ValidationError(ConleyLabError, ValueError):
    pass


class NumericalError(ConleyLabError, ArithmeticError):
    pass


# Validation

class DimensionError(ValidationError):
    pass


class PreconditionError(ValidationError):
    pass


class InvalidFrameError(ValidationError):
    pass


class ExpressionError(ValidationError):
    pass


class ContractibilityError(ValidationError):
    pass


class ScenarioError(ValidationError):
    def __init__(self, message, field = None):
        ValidationError.__init__(self, message if field is None else "{}: {}".format(field, message))
        self.field = field


class InfeasibleProfileError(ValidationError):
    def __init__(self, message, constraint = None):
        ValidationError.__init__(self, message)
        self.constraint = constraint


# Numerics

class ResolutionError(NumericalError):
    def __init__(self, message, lower_bound = None):
        NumericalError.__init__(self, message)
        self.lower_bound = lower_bound


class SolvabilityError(NumericalError):
    pass


class NonSymplecticInputError(NumericalError):
    pass


class InternalError(NumericalError):
    pass


class DegeneracyError(NumericalError):
    def __init__(self, message, min_distance = None):
        NumericalError.__init__(self, message)
        self.min_distance = min_distance


class StiffnessError(NumericalError):
    def __init__(self, message, diagnostics = None):
        NumericalError.__init__(self, message)
        self.diagnostics = diagnostics if diagnostics is not None else dict()


class ShrinkRadiusError(NumericalError):
    def __init__(self, message, suggested_radius = None):
        NumericalError.__init__(self, message)
        self.suggested_radius = suggested_radius


class IsolationError(NumericalError):
    def __init__(self, message, parameter = None):
        NumericalError.__init__(self, message)
        self.parameter = parameter


class CrossValidationError(NumericalError):
    def __init__(self, message, report = None):
        NumericalError.__init__(self, message)
        self.report = report
