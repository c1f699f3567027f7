"""Exception types raised across the toolkit."""


class KDistinctError(Exception):
    """Base class for all toolkit errors."""


class ParameterError(KDistinctError, ValueError):
    """Raised when walk or experiment parameters are out of range."""


class SizeCapError(KDistinctError):
    """Raised when a brute-force basis would exceed the configured cap."""


class ModeError(KDistinctError, ValueError):
    """Raised when a full state lives in the wrong Hilbert space."""


class NotUnitaryError(KDistinctError, ValueError):
    """Raised when a matrix expected to be unitary is not."""


class GengroverError(KDistinctError, ValueError):
    """Raised when a generalized-Grover input is outside the analysed regime."""


class StoreError(KDistinctError):
    """Raised on invalid set-store operations (duplicate or missing index)."""
