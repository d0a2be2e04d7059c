"""Message framing and the byte-counting channel.

Every message is ``type:u8 | len:u32 (little-endian) | payload``.  The
channel counts the bytes it sends and receives per traffic category, so the
numbers in a transcript are measured rather than estimated.
"""

from __future__ import annotations

import enum
import socket
import struct
from collections import Counter
from dataclasses import dataclass

from .errors import AbortReason, ProtocolError, SessionAbort, TransportError

HEADER = struct.Struct("<BI")
FRAME_OVERHEAD = HEADER.size
MAX_PAYLOAD = 1 << 31

PROTOCOL_VERSION = 1


class MsgType(enum.IntEnum):
    HELLO = 1
    SEEDPAIRS = 2
    SEEDPAIRS_ACK = 3
    MATRIX_D = 4
    COIN_R = 5
    COIN_S = 6
    CHECKS = 7
    MASKED = 8
    ABORT = 9


CATEGORIES = ("base_ot", "matrix_d", "coin_toss", "checks", "masked", "framing")

# payload category per message type; headers always go to "framing"
CATEGORY_OF = {
    MsgType.HELLO: "framing",
    MsgType.SEEDPAIRS: "base_ot",
    MsgType.SEEDPAIRS_ACK: "base_ot",
    MsgType.MATRIX_D: "matrix_d",
    MsgType.COIN_R: "coin_toss",
    MsgType.COIN_S: "coin_toss",
    MsgType.CHECKS: "checks",
    MsgType.MASKED: "masked",
    MsgType.ABORT: "framing",
}


# HELLO: version u16, mode u8, kappa u16, mu u16, m u64, n u16, ell u16, batch_size u32
HELLO = struct.Struct("<HBHHQHHI")


@dataclass(frozen=True)
class Hello:
    version: int
    mode: int
    kappa: int
    mu: int
    m: int
    n: int
    ell: int
    batch_size: int

    def pack(self) -> bytes:
        return HELLO.pack(self.version, self.mode, self.kappa, self.mu, self.m, self.n, self.ell, self.batch_size)

    @classmethod
    def unpack(cls, payload: bytes) -> Hello:
        if len(payload) != HELLO.size:
            raise ProtocolError(f"HELLO payload has {len(payload)} bytes, expected {HELLO.size}")
        return cls(*HELLO.unpack(payload))


CHECK_ENTRY = struct.Struct("<HB")


def pack_checks(tuples) -> bytes:
    return b"".join(CHECK_ENTRY.pack(t.alpha, t.b) for t in tuples)


def unpack_checks(payload: bytes, count: int) -> list[tuple[int, int]]:
    if len(payload) != CHECK_ENTRY.size * count:
        raise ProtocolError(f"CHECKS payload has {len(payload)} bytes, expected {CHECK_ENTRY.size * count}")
    return [CHECK_ENTRY.unpack_from(payload, k * CHECK_ENTRY.size) for k in range(count)]


class Channel:
    """Framed duplex message stream over a connected socket."""

    def __init__(self, sock: socket.socket, *, record: bool = False):
        self._sock = sock
        self.counts: Counter[str] = Counter({c: 0 for c in CATEGORIES})
        self.messages: Counter[str] = Counter()
        self.transcript: list[tuple[str, MsgType, bytes]] | None = [] if record else None

    def _account(self, direction: str, msg_type: MsgType, payload: bytes) -> None:
        self.counts["framing"] += FRAME_OVERHEAD
        self.counts[CATEGORY_OF[msg_type]] += len(payload)
        self.messages[msg_type.name] += 1
        if self.transcript is not None:
            self.transcript.append((direction, msg_type, bytes(payload)))

    def send(self, msg_type: MsgType, payload: bytes = b"") -> None:
        if len(payload) >= MAX_PAYLOAD:
            raise ProtocolError("payload too large")
        try:
            self._sock.sendall(HEADER.pack(msg_type, len(payload)) + payload)
        except OSError as exc:
            raise TransportError(f"send failed: {exc}") from exc
        self._account("out", msg_type, payload)

    def _recv_exact(self, size: int) -> bytes:
        buf = bytearray(size)
        view = memoryview(buf)
        got = 0
        while got < size:
            try:
                n = self._sock.recv_into(view[got:], size - got)
            except OSError as exc:
                raise TransportError(f"receive failed: {exc}") from exc
            if n == 0:
                raise TransportError("connection closed by peer")
            got += n
        return bytes(buf)

    def recv_any(self) -> tuple[MsgType, bytes]:
        raw_type, length = HEADER.unpack(self._recv_exact(HEADER.size))
        try:
            msg_type = MsgType(raw_type)
        except ValueError as exc:
            raise ProtocolError(f"unknown message type {raw_type}") from exc
        if length >= MAX_PAYLOAD:
            raise ProtocolError("payload too large")
        payload = self._recv_exact(length)
        self._account("in", msg_type, payload)
        return msg_type, payload

    def recv(self, expected: MsgType) -> bytes:
        """Receive a message of type ``expected``; a peer ABORT raises."""
        msg_type, payload = self.recv_any()
        if msg_type == MsgType.ABORT and expected != MsgType.ABORT:
            raise SessionAbort(decode_abort(payload), remote=True)
        if msg_type != expected:
            raise ProtocolError(f"expected {expected.name}, got {msg_type.name}")
        return payload

    def send_abort(self, reason: AbortReason) -> None:
        try:
            self.send(MsgType.ABORT, bytes([int(reason)]))
        except TransportError:
            pass

    def close(self) -> None:
        try:
            self._sock.close()
        except OSError:
            pass

    def __enter__(self) -> Channel:
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def decode_abort(payload: bytes) -> AbortReason:
    if len(payload) != 1:
        return AbortReason.PROTOCOL_ERROR
    try:
        return AbortReason(payload[0])
    except ValueError:
        return AbortReason.PROTOCOL_ERROR


def channel_pair(*, record: bool = False) -> tuple[Channel, Channel]:
    """Two connected in-process channels."""
    a, b = socket.socketpair()
    return Channel(a, record=record), Channel(b, record=record)


def parse_endpoint(text: str) -> tuple[str, int]:
    host, sep, port = text.rpartition(":")
    if not sep or not port.isdigit():
        raise ValueError(f"endpoint must be host:port, got {text!r}")
    return host or "127.0.0.1", int(port)


def connect(endpoint: str, *, timeout: float = 10.0, record: bool = False) -> Channel:
    import time

    host, port = parse_endpoint(endpoint)
    deadline = time.monotonic() + timeout
    while True:
        try:
            sock = socket.create_connection((host, port), timeout=timeout)
            break
        except OSError as exc:
            if time.monotonic() > deadline:
                raise TransportError(f"cannot connect to {endpoint}: {exc}") from exc
            time.sleep(0.05)
    sock.settimeout(None)
    sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
    return Channel(sock, record=record)


def listen(endpoint: str, *, timeout: float | None = 60.0, record: bool = False) -> Channel:
    host, port = parse_endpoint(endpoint)
    with socket.create_server((host, port), reuse_port=False) as server:
        server.settimeout(timeout)
        try:
            sock, _ = server.accept()
        except OSError as exc:
            raise TransportError(f"no peer connected on {endpoint}: {exc}") from exc
    sock.settimeout(None)
    sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
    return Channel(sock, record=record)
