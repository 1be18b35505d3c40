"""Error hierarchy.

Two families matter to callers: :class:`DataError` covers anything wrong with
user-supplied inputs (bad files, mismatched shapes, empty collections) and maps
to CLI exit code 2; :class:`InternalError` covers numeric failures and broken
self-checks and maps to exit code 3.
"""


class PeepError(Exception):
    """Base class for every library error."""


class DataError(PeepError):
    """Invalid or inconsistent input data."""


class UnsupportedFormat(DataError):
    """File magic is not a format this library reads."""


class CorruptFile(DataError):
    """File has a valid magic but a broken header or truncated payload."""


class EmptyDataset(DataError):
    """No class survived dataset assembly."""


class EmptyPartition(DataError):
    """A partition holds no vectors."""


class EmptyInput(DataError):
    """An operation that needs at least one element received none."""


class DimensionMismatch(DataError):
    """Vector or image dimensions do not agree."""


class TooFewImages(DataError):
    """Eigenface fitting needs at least two samples."""


class SingleClass(DataError):
    """Classifier training needs at least two distinct labels."""


class NotSymmetric(DataError):
    """Matrix handed to the symmetric eigensolver is not symmetric."""


class NotFitted(DataError):
    """Estimator used before fit."""


class BundleError(DataError):
    """Model bundle file cannot be loaded."""


class BadMagic(BundleError):
    """Bundle file does not start with the expected magic."""


class VersionMismatch(BundleError):
    """Bundle format version or internal consistency check failed."""


class TruncatedBundle(BundleError):
    """Bundle payload is shorter than its header declares."""


class InternalError(PeepError):
    """Numeric or consistency failure inside the library."""


class NoConvergence(InternalError):
    """Eigendecomposition did not converge."""


class EquivalenceCheckFailed(InternalError):
    """A merged-statistics result disagrees with the batch computation."""
