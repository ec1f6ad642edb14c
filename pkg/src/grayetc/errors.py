"""Exception hierarchy shared by the library and the command line tool."""


class GrayEtcError(Exception):
    """Base class for all errors raised by grayetc."""


class FormatError(GrayEtcError, ValueError):
    """Malformed input file, sidecar, table or assignment."""


class KeyFormatError(GrayEtcError, ValueError):
    """Key material that cannot be parsed (wrong length, non-hex)."""


class CodecError(GrayEtcError, RuntimeError):
    """The JPEG codec failed to encode or decode."""


class GeometryError(GrayEtcError, ValueError):
    """Image, block or layout dimensions that do not fit together."""
