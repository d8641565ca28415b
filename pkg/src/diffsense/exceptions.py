"""Exception hierarchy shared by the library and the command-line tools."""


class DiffsenseError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(DiffsenseError, ValueError):
    """A scene or pipeline configuration failed validation.

    Attributes:
        field: Dotted path of the offending field, or ``None`` when the
            problem is not attributable to a single field.
    """

    def __init__(self, message: str, field: str | None = None):
        self.field = field
        if field:
            message = f"{field}: {message}"
        super().__init__(message)


class RecordingFormatError(DiffsenseError, ValueError):
    """An on-disk recording is malformed (bad header, truncated data, ...)."""


class MetadataMissingError(RecordingFormatError, FileNotFoundError):
    """The JSON sidecar of a recording could not be found."""


class ChannelLengthMismatchError(RecordingFormatError):
    """The two channel files of a recording hold different sample counts."""


class NoFramesDetectedError(DiffsenseError):
    """Frame segmentation found nothing usable in the reference channel."""


class UnusableFrameError(DiffsenseError):
    """Every frequency bin of a frame was excluded by the null guard."""


class UnusableSeriesError(DiffsenseError):
    """All frames of a recording were unusable for differential estimation."""
