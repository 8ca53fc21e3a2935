"""Core base exceptions for hevi_slice along with the error categories surfaced by the command line.

The categories map onto process exit codes:

* `ConfigError` and `OutputError` -> 1
* `NumericError` and its subclasses -> 2
* `InvariantFailure` -> 3
"""
from hevi_slice.classtools import get_class_attributes

EXIT_OK = 0
EXIT_CONFIG_ERROR = 1
EXIT_NUMERIC_ERROR = 2
EXIT_INVARIANT_FAILURE = 3


class HeviSliceException(Exception):
    """
    Base exception for everything raised by this library.

    Subclasses define a `message` class attribute and declare the attributes used to render it.  Values for the
    attributes are passed as kwargs:

    >>> class MyException(HeviSliceException):
    >>>     message = "Bad level {level}"
    >>>     level = None
    >>>
    >>> my_exception = MyException(level=3)
    >>> assert my_exception.level == 3
    >>> assert my_exception.message == "Bad level 3"

    """
    message = None
    exit_code = EXIT_NUMERIC_ERROR

    def __init__(self, message=None, *args, **kwargs):
        self._set_kwargs(kwargs)
        self.message = self._format_message(message, args)
        super(HeviSliceException, self).__init__(self.message)

    def _format_message(self, message, args):
        """Formats the message of the exception
        """
        if message is None:
            message = args[0] if args else self.message

        attrs = get_class_attributes(self.__class__, include_base_attrs=True, include_private=False)
        attrs.update(self.__dict__)
        return message.format(**attrs) if message else None

    def _set_kwargs(self, kwargs):
        """Sets the values of the kwargs of the init of the exception as attributes on the exception instance
        """
        for key, val in kwargs.items():
            try:
                if key.startswith("_"):
                    raise IllegalArgumentException("Illegal argument {argument_name}.  Cannot provide private "
                                                   "properties as kwargs", argument_name=key)
                attr_val = getattr(self, key)

                if callable(attr_val):
                    raise IllegalArgumentException("Illegal argument {argument_name}.  Cannot provide a kwarg that "
                                                   "is a method on the exception", argument_name=key)
            except AttributeError:
                raise IllegalArgumentException("Cannot provide kwarg '{argument_name}' that is not a declared "
                                               "property on the exception", argument_name=key)

            setattr(self, key, val)


class HeviSliceValueError(HeviSliceException, ValueError):
    """Raised if a value is illegal or not allowed
    """
    value_name = None
    message = "Invalid value provided for {value_name}"


class IllegalArgumentException(HeviSliceValueError):
    """Raised if an argument provided to a method or class is not allowed
    """
    argument_name = None
    message = "The provided argument {argument_name} is not allowed"


class ConfigError(HeviSliceValueError):
    """Raised for an unknown key, a malformed value or a missing required key in a run configuration"""
    exit_code = EXIT_CONFIG_ERROR
    key = None
    line_number = None
    reason = None
    message = "Configuration error for key '{key}' at line {line_number}: {reason}"


class OutputError(HeviSliceException):
    """Raised when a result file cannot be written"""
    exit_code = EXIT_CONFIG_ERROR
    path = None
    reason = None
    message = "Unable to write output {path}: {reason}"


class NumericError(HeviSliceException, ArithmeticError):
    """Base for failures of the numerical machinery"""
    message = "Numerical failure: {reason}"
    reason = None


class InvalidDegreeError(NumericError, ValueError):
    """Raised when a polynomial degree below 1 is requested"""
    degree = None
    message = "Polynomial degree must be >= 1, got {degree}"


class SingularMatrixError(NumericError):
    """Raised when a factorisation meets a pivot below the singularity threshold"""
    pivot = None
    message = "Matrix is numerically singular (pivot magnitude {pivot})"


class LinearSolverError(NumericError):
    """Raised when a linear solve fails"""
    message = "Linear solve failed: {reason}"


class ConvergenceError(NumericError):
    """Raised when an iteration exhausts its budget; carries the residual history"""
    iterations = None
    residual_history = None
    message = "No convergence after {iterations} iterations; last residuals {residual_history}"


class DegenerateStateError(NumericError):
    """Raised when a field-weighted matrix is not positive/solvable for the current state"""
    field_name = None
    message = "Degenerate state: {field_name} is not strictly positive at every quadrature point"


class ThermodynamicDomainError(NumericError, ValueError):
    """Raised when a thermodynamic variable leaves its positive domain"""
    field_name = None
    minimum = None
    message = "{field_name} must be strictly positive, minimum value {minimum}"


class StartupError(NumericError):
    """Raised when a two-level scheme is asked to step without its previous level"""
    message = "Leapfrog mode requires the previous time level; use euler for the first step"


class InvariantFailure(HeviSliceException, AssertionError):
    """Raised by the invariant suite when at least one check fails"""
    exit_code = EXIT_INVARIANT_FAILURE
    failed = None
    message = "Invariant checks failed: {failed}"
