"""Exception hierarchy.

Every error class carries an ``exit_code`` used by the command-line front end,
so distinct failure classes map to distinct process exit statuses.
"""


class PorocrackError(Exception):
    exit_code = 1


class ConfigError(PorocrackError):
    exit_code = 2

    def __init__(self, pointer, message):
        self.pointer = pointer
        super().__init__(f"{pointer}: {message}")


class InvalidPoisson(PorocrackError, ValueError):
    exit_code = 3


class DegenerateStiffness(PorocrackError, ArithmeticError):
    """The density factor ``1 + beta * tr(eps)`` fell to or below the floor."""

    exit_code = 4

    def __init__(self, message, element=None, qpoint=None, iteration=None):
        self.element = element
        self.qpoint = qpoint
        self.iteration = iteration
        super().__init__(message)


class NonphysicalDensity(PorocrackError, ValueError):
    exit_code = 5


class BadSpec(PorocrackError, ValueError):
    exit_code = 6


class MeshError(PorocrackError):
    exit_code = 7


class ParseError(MeshError):
    pass


class UnsupportedElement(MeshError):
    pass


class MissingTag(MeshError):
    pass


class DegenerateElement(MeshError):
    pass


class Unsupported(MeshError):
    pass


class NotFound(PorocrackError, LookupError):
    exit_code = 8


class InconsistentState(PorocrackError, ValueError):
    exit_code = 9


class NotConverged(PorocrackError):
    """Iteration cap reached. ``achieved`` holds the last residual or change."""

    exit_code = 10

    def __init__(self, message, achieved=None, state=None, report=None):
        self.achieved = achieved
        self.state = state
        self.report = report
        super().__init__(message)


class IndefiniteMatrix(PorocrackError, ArithmeticError):
    exit_code = 11


class MissingBaseline(PorocrackError, ValueError):
    exit_code = 12


class IoError(PorocrackError, OSError):
    exit_code = 13


class VerificationFailed(PorocrackError):
    exit_code = 14
