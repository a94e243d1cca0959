"""Exception hierarchy.

Everything raised deliberately by the package derives from :class:`GaitError`
so the CLI can map it to the validation exit code.
"""


class GaitError(Exception):
    """Base class for all package errors."""


class CalibrationError(GaitError, ValueError):
    """Calibration values violate the camera model invariants."""


class PointAtInfinityError(GaitError, ValueError):
    """A projected point has a vanishing homogeneous coordinate."""


class IllConditionedError(GaitError, ValueError):
    """Triangulation rays are (nearly) parallel."""


class CheiralityError(GaitError, ValueError):
    """Triangulated point lies behind the reference camera."""


class OpenStepError(GaitError, LookupError):
    """No lift was found before the end of the FSR trace."""


class MalformedSequenceError(GaitError, ValueError):
    """Footfall events do not alternate heel strike / lift per foot."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class AlignmentError(GaitError, ValueError):
    """Clock-corrected event streams do not interleave consistently."""


class UndefinedStatisticError(GaitError, ZeroDivisionError):
    """%CV or %Sym with a (near) zero denominator."""


class ConfigError(GaitError, ValueError):
    """Inconsistent configuration or mismatched input files."""


class ParseError(GaitError, ValueError):
    """A data file could not be parsed; message carries the location."""


class CheckpointError(GaitError, ValueError):
    """Model checkpoint is corrupt or has an unsupported version."""


class GaitWarning(UserWarning):
    """Non-fatal anomaly, e.g. negative double support (running gait)."""
