"""Exception types shared across the package."""


class LLGFlowError(Exception):
    """Base class for all package errors."""


class NonFinite(LLGFlowError):
    """A field contains NaN or Inf where a finite value is required."""


class ProjectionDegenerate(LLGFlowError):
    """Pointwise modulus dropped below 0.5 before sphere projection.

    Signals blow-up or a time step too large for the current data.
    """

    def __init__(self, message, time=None, min_modulus=None):
        super().__init__(message)
        self.time = time
        self.min_modulus = min_modulus


class BlowUpSuspected(LLGFlowError):
    """The gradient sup-norm exceeded the resolvability ceiling."""

    def __init__(self, message, time=None, trajectory=None):
        super().__init__(message)
        self.time = time
        self.trajectory = trajectory


class FrameDegenerate(LLGFlowError):
    """The reference axis is too close to +/-m somewhere on the grid."""

    def __init__(self, message, worst_index=None, worst_value=None):
        super().__init__(message)
        self.worst_index = worst_index
        self.worst_value = worst_value


class MollifierDegenerate(LLGFlowError):
    """min |phi_eps * m| <= 1/2, so normalization would be unstable."""


class NoContraction(LLGFlowError):
    """Picard iteration differences grew for several consecutive iterates."""

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = history


class ConfigError(LLGFlowError):
    """A run-configuration file failed to parse or validate."""
