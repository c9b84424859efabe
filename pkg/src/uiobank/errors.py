"""Exception hierarchy shared by the synthesis, runtime and CLI layers."""


class UioBankError(Exception):
    """Base class for every error raised by this package."""


class InvalidInput(UioBankError, ValueError):
    """Malformed arguments: wrong shapes, non-finite entries, bad ranges."""


class DesignInfeasible(UioBankError):
    """A requested observer, gain or bank cannot be synthesized."""

    def __init__(self, message, subset=None):
        super().__init__(message)
        self.subset = subset


class NoConvergence(UioBankError):
    """An iterative routine ran out of iterations."""


class NotReady(UioBankError):
    """Isolation was queried before the warmup period elapsed."""


class InternalInconsistency(UioBankError):
    """Bookkeeping invariant broken (e.g. an estimate missing from the bank)."""


class UnstabilizableConfiguration(UioBankError):
    """More actuators isolated than the switching controller can tolerate."""


class SimulationDiverged(UioBankError):
    """State blew past the divergence guard."""

    def __init__(self, message, step):
        super().__init__(message)
        self.step = step
