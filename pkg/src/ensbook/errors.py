"""Exception hierarchy shared across the package."""


class EnsbookError(Exception):
    """Base class for every error this package raises deliberately."""


class ManifestError(EnsbookError):
    """Manifest document is malformed or lists an invalid coordinate set."""


class VolumeReadError(EnsbookError):
    """Raw volume bytes could not be read back as a valid volume."""


class CodebookFormatError(EnsbookError):
    """Structural problem in a codebook file."""


class BadMagicError(CodebookFormatError):
    """File does not start with the codebook magic bytes."""


class VersionMismatchError(CodebookFormatError):
    """Codebook was written with an unsupported format version."""


class TruncatedIndexError(CodebookFormatError):
    """Block index is shorter than the header declares."""


class IndexBoundsError(CodebookFormatError):
    """Block index entries overlap or point outside the payload section."""


class BlockDecodeError(CodebookFormatError):
    """Payload bytes for a single block could not be decoded."""


class BudgetExceededError(EnsbookError):
    """Requested working set does not fit the configured byte budget."""
