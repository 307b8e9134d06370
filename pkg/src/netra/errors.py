"""Exception hierarchy shared across the pipeline.

Everything raised on purpose derives from NetraError so callers (and the CLI)
can map failures to exit codes without fishing for bare ValueErrors.
"""


class NetraError(Exception):
    """Base class for all library errors."""


class InvalidSampleError(NetraError):
    """A sensor sample violates its physical constraints."""


class CalibrationError(NetraError):
    """Background calibration input is unusable (wrong arity or range)."""


class CalibrationIncompleteError(NetraError):
    """The activation pipeline ran before calibration finished."""


class TraceParseError(NetraError):
    """An event-trace file is malformed. Carries the 1-based line number."""

    def __init__(self, message, line_no=None):
        self.line_no = line_no
        if line_no is not None:
            message = "line %d: %s" % (line_no, message)
        super().__init__(message)


class ConfigError(NetraError):
    """A configuration value is out of range or unknown.

    `field` is the dotted path of the offending key, e.g. "fusion.tau_c".
    """

    def __init__(self, field, message):
        self.field = field
        super().__init__("%s: %s" % (field, message))


class InvalidDetectionError(NetraError):
    """A frame or detection fails geometric validation."""


class CodecError(NetraError):
    """Base class for alert frame encode/decode failures."""


class FrameLengthError(CodecError):
    pass


class FrameIntegrityError(CodecError):
    """CRC mismatch: the frame was corrupted in flight."""


class FrameVersionError(CodecError):
    pass


class FrameFieldError(CodecError):
    """A structurally intact frame carries an out-of-range field."""
