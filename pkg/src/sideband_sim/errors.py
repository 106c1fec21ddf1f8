"""Exception hierarchy shared by all engines."""


class SidebandError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(SidebandError, ValueError):
    """Invalid parameter or malformed configuration file.

    ``field`` names the offending key (``"mode_a.decay_rate"``) when known;
    ``line``/``column`` locate parse errors inside a config file.
    """

    def __init__(self, message, field=None, line=None, column=None):
        super().__init__(message)
        self.field = field
        self.line = line
        self.column = column


class DegenerateConfigError(SidebandError, ValueError):
    """The requested steady state does not exist or is not unique."""


class UnsupportedModelError(SidebandError, NotImplementedError):
    """Operation is not defined for the given coupling kind."""


class CapacityError(SidebandError):
    """A truncated Hilbert space would exceed the configured size bound."""


class IntegrationError(SidebandError, RuntimeError):
    """Time integration failed or violated a physical-state tolerance."""


class StiffnessError(IntegrationError):
    """Adaptive step size collapsed."""


class MultiplicityError(DegenerateConfigError):
    """The Liouvillian has more than one stationary state."""


class MultistabilityError(SidebandError, RuntimeError):
    """Fixed-point iteration did not settle; ``roots`` lists every real root found."""

    def __init__(self, message, roots=()):
        super().__init__(message)
        self.roots = list(roots)
