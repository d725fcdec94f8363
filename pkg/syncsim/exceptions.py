"""Error hierarchy shared by the simulation modules and the commands."""


class SyncSimError(Exception):
    """Base class for every error raised by the simulator."""


class SpacetimeDomainError(SyncSimError, ValueError):
    """A radial coordinate lies at or inside the Schwarzschild radius."""


class QuadratureError(SyncSimError):
    """The composite Gauss-Legendre rule did not reach its tolerance."""


class EstimationError(SyncSimError):
    """Base class for failures of the dip estimator."""

    code = "EstimationError"


class EdgeDip(EstimationError):
    """The minimum-count bin sits on the first or last scan point."""

    code = "EdgeDip"


class Underdetermined(EstimationError):
    """Fewer usable points than the fit needs, or no signal at all."""

    code = "Underdetermined"


class NoConvergence(EstimationError):
    """The damped least-squares iteration stalled."""

    code = "NoConvergence"


class InsufficientPlateau(EstimationError):
    """A scan has no points far enough from the dip to read the plateau."""

    code = "InsufficientPlateau"


class ConfigurationError(SyncSimError):
    """A scenario file or command option could not be turned into a valid setup."""
