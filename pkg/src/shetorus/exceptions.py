"""Exception types raised across the package."""


class InvalidParameterError(ValueError):
    """A numeric argument is non-finite or outside its admissible range."""


class HypothesisError(ValueError):
    """A coefficient violates a structural hypothesis (sign, growth, ordering)."""

    def __init__(self, message, z=None):
        super().__init__(message)
        self.z = z


class PreconditionError(ValueError):
    """An operation was called on inputs that do not meet its contract."""


class EstimationError(RuntimeError):
    """A refinement loop did not stabilise; carries the estimate history."""

    def __init__(self, message, history=()):
        super().__init__(message)
        self.history = list(history)


class BlowupError(RuntimeError):
    """The discrete field became non-finite."""

    def __init__(self, step, replica=None):
        where = f" (replica {replica})" if replica is not None else ""
        super().__init__(f"non-finite field detected at step {step}{where}")
        self.step = step
        self.replica = replica


class ConsistencyError(RuntimeError):
    """Trajectories that must agree bit-for-bit did not."""


class InsufficientReplicasError(ValueError):
    pass


class ConfigError(ValueError):
    """Malformed experiment configuration; ``key`` names the offending entry."""

    def __init__(self, message, key=None, line=None):
        super().__init__(message)
        self.key = key
        self.line = line
