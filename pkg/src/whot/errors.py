"""Exception hierarchy shared by every layer of the toolkit."""

from __future__ import annotations

import enum


class WhotError(Exception):
    """Base class for all toolkit errors."""


class DimensionError(WhotError, ValueError):
    """Operands have incompatible lengths or shapes."""


class ParameterError(WhotError, ValueError):
    """A parameter is outside its valid domain."""


class AmbiguityError(WhotError):
    """Pruned decoding requested with too many pruned positions."""


class ProtocolError(WhotError):
    """The peer sent something that violates the wire protocol."""


class TransportError(WhotError):
    """The underlying byte stream failed or closed early."""


class InconsistentTranscriptError(WhotError):
    """An attack step found a transcript that matches no hypothesis."""


class AbortReason(enum.IntEnum):
    """Reason codes carried in MSG_ABORT and handshake refusals."""

    VERSION_MISMATCH = 1
    MODE_MISMATCH = 2
    PARAM_MISMATCH = 3
    INVALID_PARAMS = 4
    CHECK_FAILED = 5
    PROTOCOL_ERROR = 6


class SessionAbort(WhotError):
    """The session ended in an abort, local or remote."""

    def __init__(self, reason: AbortReason, message: str = "", *, remote: bool = False):
        self.reason = AbortReason(reason)
        self.remote = remote
        text = f"{self.reason.name}{' (peer)' if remote else ''}"
        super().__init__(f"{text}: {message}" if message else text)


class HandshakeRefused(SessionAbort):
    """Parameter negotiation failed."""


class CheckFailed(SessionAbort):
    """The sender rejected one of the consistency-check iterations."""

    def __init__(self, iteration: int, message: str = ""):
        self.iteration = iteration
        super().__init__(AbortReason.CHECK_FAILED, message or f"check {iteration} failed")
