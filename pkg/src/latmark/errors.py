"""Exception types shared by the construction and verification modules."""


class LatmarkError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(LatmarkError):
    pass


class EmptyCore(LatmarkError):
    """Core requested with a side length too small to survive shrinking."""


class TooThin(LatmarkError):
    """Rectangle too short in the marker direction."""


class TooShort(LatmarkError):
    """Interval too short for the requested number of spaced subintervals."""


class TooSmall(LatmarkError):
    """Rectangle side below the schedule's D_0 (or D_1) threshold."""


class InternalInvariant(LatmarkError):
    """A construction invariant failed; indicates a bug, never expected."""


class DegenerateDirection(LatmarkError):
    """Direction vector has a zero coordinate where non-zero is required."""


class InfeasibleSides(LatmarkError):
    """World side not expressible as a sum of allowed region sizes."""


class TilingMismatch(LatmarkError):
    """Tiling does not match the schedule the construction requires."""


class WrongMode(LatmarkError):
    """Operation requires the other world mode (torus vs window)."""


class SpacingTooSmall(LatmarkError):
    """Marker set spacing below what the application requires."""


class UnsupportedGenerator(LatmarkError):
    """Generator support size is neither 1 nor the full dimension."""


class WorldTooSmall(LatmarkError):
    """World cannot hold the coarse tiling the construction needs."""


class SearchCapExceeded(LatmarkError):
    """Brute-force search space larger than the configured cap."""
