"""Session handshake and connection configuration."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import AbortReason, HandshakeRefused, ParameterError
from .params import MODE_CODES, Params
from .wire import PROTOCOL_VERSION, Channel, Hello, MsgType

_MODE_NAMES = {code: name for name, code in MODE_CODES.items()}


def hello_for(params: Params, version: int = PROTOCOL_VERSION) -> Hello:
    return Hello(version, params.mode_code, params.kappa, params.mu, params.m, params.n, params.ell,
                 params.batch_size)


def params_from_hello(hello: Hello) -> Params:
    mode = _MODE_NAMES.get(hello.mode)
    if mode is None:
        raise ParameterError(f"unknown mode code {hello.mode}")
    return Params(m=hello.m, n=hello.n, ell=hello.ell, kappa=hello.kappa, mu=hello.mu, mode=mode,
                  batch_size=hello.batch_size)


def refusal_reason(ours: Hello, theirs: Hello) -> AbortReason | None:
    if theirs.version != ours.version:
        return AbortReason.VERSION_MISMATCH
    if theirs.mode != ours.mode:
        return AbortReason.MODE_MISMATCH
    try:
        params_from_hello(theirs)
    except ParameterError:
        return AbortReason.INVALID_PARAMS
    if theirs != ours:
        return AbortReason.PARAM_MISMATCH
    return None


def handshake(channel: Channel, params: Params) -> Params:
    """Exchange HELLO messages; refuse with a coded ABORT on any disagreement."""
    ours = hello_for(params)
    channel.send(MsgType.HELLO, ours.pack())
    theirs = Hello.unpack(channel.recv(MsgType.HELLO))
    reason = refusal_reason(ours, theirs)
    if reason is not None:
        channel.send_abort(reason)
        raise HandshakeRefused(reason, f"peer sent {theirs}")
    return params


@dataclass
class SessionConfig:
    role: str
    params: Params
    listen: str | None = None
    connect: str | None = None
    seed: int | None = None
    stats_path: str | None = None

    def __post_init__(self):
        if self.role not in ("sender", "receiver", "attacker"):
            raise ParameterError(f"unknown role {self.role!r}")
        if (self.listen is None) == (self.connect is None):
            raise ParameterError("exactly one of listen / connect is required")
