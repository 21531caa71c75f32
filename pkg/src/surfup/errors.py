"""Exception types raised across the toolkit."""


class SurfupError(Exception):
    """Base class for all toolkit errors."""


class DegenerateInput(SurfupError):
    """6D rotation input cannot be orthonormalized (zero or parallel vectors)."""


class EmptyCloud(SurfupError):
    """A point cloud with zero points was supplied."""


class KTooLarge(SurfupError):
    """Requested more neighbors than points in the index."""


class MTooLarge(SurfupError):
    """Requested more samples than points in the cloud."""


class DegenerateNeighborhood(SurfupError):
    """Neighborhood covariance has rank < 2; no projection plane exists."""


class SizeMismatch(SurfupError):
    """Operation requires equal-size point clouds."""


class EmptyMesh(SurfupError):
    """A mesh with no usable faces was supplied."""


class ParseError(SurfupError):
    """Malformed input file.

    Carries the path and, when known, the 1-based line number or byte
    offset where parsing failed.
    """

    def __init__(self, message, path=None, line=None, offset=None):
        loc = []
        if path is not None:
            loc.append(str(path))
        if line is not None:
            loc.append(f"line {line}")
        if offset is not None:
            loc.append(f"byte {offset}")
        if loc:
            message = f"{': '.join(loc)}: {message}"
        super().__init__(message)
        self.path = path
        self.line = line
        self.offset = offset


class UnsupportedFormat(SurfupError):
    """File format not handled by the readers/writers."""


class IoError(SurfupError):
    """Filesystem-level failure while reading or writing."""


class ConfigError(SurfupError):
    """Invalid upsampling or CLI configuration."""
