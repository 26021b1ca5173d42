"""Exception hierarchy.

Every error carries a short machine-readable ``kind`` string that the CLI
emits in its error JSON.
"""


class EvidenceError(Exception):
    kind = "EvidenceError"

    def to_dict(self):
        return {"kind": self.kind, "message": str(self)}


class ImageFileNotFound(EvidenceError, FileNotFoundError):
    kind = "FileNotFound"


class DecodeError(EvidenceError):
    kind = "DecodeError"


class ImageTooSmall(EvidenceError):
    kind = "ImageTooSmall"


class BoxOutOfBounds(EvidenceError):
    kind = "BoxOutOfBounds"


class EmptyGrid(EvidenceError):
    kind = "EmptyGrid"


class LengthMismatch(EvidenceError):
    kind = "LengthMismatch"


class DimensionMismatch(EvidenceError):
    kind = "DimensionMismatch"


class NonPositiveSigma(EvidenceError):
    kind = "NonPositiveSigma"


class SchemaError(EvidenceError):
    kind = "SchemaError"


class GridMismatch(EvidenceError):
    kind = "GridMismatch"


class NonFiniteValue(EvidenceError):
    kind = "NonFiniteValue"


class TooManyClusters(EvidenceError):
    kind = "TooManyClusters"


class ZeroVector(EvidenceError):
    kind = "ZeroVector"


class NegativeAlpha(EvidenceError):
    kind = "NegativeAlpha"


class EmptyEvidence(EvidenceError):
    kind = "EmptyEvidence"


class IoError(EvidenceError):
    kind = "IoError"


class RegionOutOfBounds(EvidenceError):
    kind = "RegionOutOfBounds"


class EmptyDirectory(EvidenceError):
    kind = "EmptyDirectory"


class ConfigError(EvidenceError):
    """Invalid run configuration; ``kind`` names the offending field."""

    def __init__(self, kind, message):
        super().__init__(message)
        self.kind = kind


class GatewayError(EvidenceError):
    kind = "GatewayError"


class BackendTimeout(GatewayError):
    kind = "Timeout"


class HttpError(GatewayError):
    kind = "HttpError"

    def __init__(self, status, message=""):
        super().__init__(f"HTTP {status}: {message}" if message else f"HTTP {status}")
        self.status = status


class MalformedResponse(GatewayError):
    kind = "MalformedResponse"
