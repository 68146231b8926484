"""Exception types raised by kamtransport."""


class KamTransportError(Exception):
    """Base class for all library errors."""


class DomainError(KamTransportError, ValueError):
    """An argument lies outside the domain of an operation."""


class NotInvertibleError(KamTransportError):
    """A map expected to be strictly increasing is not."""

    def __init__(self, index, message=None):
        self.index = int(index)
        super().__init__(message or f"map is not strictly increasing at node {self.index}")


class SingularDensityError(KamTransportError):
    """log-density is -inf at an interior node."""


class DegenerateJacobianError(KamTransportError):
    """Jacobian (or U') too close to zero for a change of variables."""


class AssemblyError(KamTransportError):
    """Elliptic operator coefficients are not finite."""


class SingularOperatorError(KamTransportError):
    """The discrete elliptic system could not be solved."""

    def __init__(self, condition, message=None):
        self.condition = condition
        super().__init__(message or f"singular elliptic operator (condition indicator {condition:.3e})")


class StepFailureError(KamTransportError):
    """A KAM step could not keep the map monotone."""

    def __init__(self, message, diagnostics=None):
        self.diagnostics = diagnostics or {}
        super().__init__(message)


class DegenerateStepError(KamTransportError):
    """An affine recurrence step hit A_n = 0."""


class PreconditionError(KamTransportError):
    """A documented precondition of an operation is violated."""


class FlattenError(KamTransportError):
    """Composition of the map stack is not strictly increasing."""


class ConfigError(KamTransportError):
    """Experiment configuration is invalid."""
