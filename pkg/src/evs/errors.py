"""Exception taxonomy shared across the package."""


class EvsError(Exception):
    """Base class for all errors raised by this package."""


class ShapeError(EvsError):
    """Tensor or array shapes do not satisfy an operation's contract."""


class ContractError(EvsError):
    """An internal invariant was violated (non-finite values, coverage gaps,
    non-scalar loss, ...)."""


class DataError(EvsError):
    """Input data is unusable: empty frame sequence, single-class dataset,
    out-of-range pixel values."""


class FormatError(EvsError):
    """A binary or JSON payload failed to parse. ``offset`` points at the
    first offending byte when known."""

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class ConfigError(EvsError):
    """A configuration value is missing or out of range."""


class ModelError(EvsError):
    """Model and labels (or model and profile) disagree."""


class RangeError(EvsError):
    """A requested interval falls outside the stored timeline."""


class NotFoundError(EvsError):
    """A referenced resource (video id, session id) does not exist."""


class TransportError(EvsError):
    """A network operation failed. Retryable by the caller."""

    def __init__(self, message: str, retryable: bool = True):
        super().__init__(message)
        self.retryable = retryable
