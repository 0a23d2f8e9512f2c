"""Exception types shared across the package."""


class BlockpermError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(BlockpermError, ValueError):
    """An argument or parameter combination violates a documented bound."""


class KeyFormatError(BlockpermError, ValueError):
    """A key file is malformed; the message names the offending field."""


class KeyMismatchError(BlockpermError):
    """Ciphertext provenance does not match the supplied key."""


class DatasetFormatError(BlockpermError, ValueError):
    """A dataset file does not follow its binary or on-disk layout."""
