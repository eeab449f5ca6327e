"""Exception hierarchy shared by all modules."""


class PwsavgError(Exception):
    """Base class for every error raised by the package."""


class NumericalError(PwsavgError):
    """A computation failed for numerical reasons (exit code 1 in the CLI)."""


class ScenarioError(PwsavgError):
    """Invalid user input: model, parameters or scenario file (exit code 2)."""


class UnknownModel(ScenarioError):
    pass


class InvalidParams(ScenarioError):
    pass


class ParseError(ScenarioError):
    def __init__(self, message, line=None, column=None):
        super().__init__(message)
        self.line = line
        self.column = column


class SchemaError(ScenarioError):
    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


class UnresolvedOrthant(NumericalError):
    """Right-hand side requested with a zero sign on a switching component."""


class StepSizeUnderflow(NumericalError):
    pass


class TangentialContact(NumericalError):
    """A switching hyperplane is touched with (near) zero normal velocity."""

    def __init__(self, message, time=None, component=None, margin=None):
        super().__init__(message)
        self.time = time
        self.component = component
        self.margin = margin


class StickingDetected(NumericalError):
    """Both one-sided vector fields point toward the switching hyperplane."""

    def __init__(self, message, time=None, component=None):
        super().__init__(message)
        self.time = time
        self.component = component


class SwitchAtBoundary(NumericalError):
    """A crossing lands on the initial instant or on the end of the horizon."""

    def __init__(self, message, time=None, component=None):
        super().__init__(message)
        self.time = time
        self.component = component


class TooManyEvents(NumericalError):
    pass


class NoConvergence(NumericalError):
    def __init__(self, message, iterations=None, residual=None):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual


class SingularJacobian(NumericalError):
    pass
