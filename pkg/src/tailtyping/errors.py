"""Exception hierarchy shared across the toolkit.

The CLI maps these onto exit codes: input-format problems exit 2,
protocol/transport problems exit 3, violated self-checks exit 4.
"""


class TailTypingError(Exception):
    """Base class for all toolkit errors."""


class InputFormatError(TailTypingError):
    """A file or record does not match its declared format."""


class TransportError(TailTypingError):
    """A network or subprocess transport failed after bounded retries."""


class QuotaError(TransportError):
    """The search API refused the request because the quota is exhausted."""


class ProtocolError(TailTypingError):
    """A scorer connection violated the wire protocol."""


class InvariantViolation(TailTypingError):
    """An internal self-check failed; results must not be trusted."""
