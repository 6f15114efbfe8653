"""Exception types raised across the package."""

from __future__ import annotations


class CatchTrackError(Exception):
    """Base class for every error raised by this package."""


class InputError(CatchTrackError):
    """Bad user input (maps to CLI exit code 2)."""


class EmptyRegion(CatchTrackError):
    """A box lies entirely outside the frame."""


class ShapeError(CatchTrackError, ValueError):
    pass


class DegenerateFeature(CatchTrackError, ValueError):
    pass


class EmptyTracklet(CatchTrackError):
    pass


class BootstrapUnderflow(CatchTrackError):
    """Not enough distinct seed detections to initialise the gallery."""


class ExtractionError(CatchTrackError):
    """A feature extractor failed on one detection."""


class RemapOutOfBounds(CatchTrackError):
    pass


class SlotConflict(CatchTrackError):
    """A (frame, identity) record slot was written twice."""


class FrameEvicted(CatchTrackError, KeyError):
    pass


class LayoutError(CatchTrackError):
    """Actors cannot be placed inside the requested frame."""


class UnknownIdentity(CatchTrackError, KeyError):
    pass


class DegenerateCost(CatchTrackError, ZeroDivisionError):
    pass


class ParseError(InputError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ConfigError(InputError):
    pass
