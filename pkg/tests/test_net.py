import socket
import threading

import pytest

from whot.errors import AbortReason, HandshakeRefused, ParameterError, ProtocolError, SessionAbort, TransportError
from whot.net import SessionConfig, handshake, hello_for, params_from_hello
from whot.params import Params
from whot.wire import HELLO, Channel, Hello, MsgType, channel_pair, connect, decode_abort, listen, parse_endpoint

BASE = Params(m=100, n=16, ell=4, kappa=256, mu=96)


def _both(p_a, p_b):
    a, b = channel_pair()
    box = {}

    def other():
        try:
            box["a"] = handshake(a, p_a)
        except SessionAbort as exc:
            box["a"] = exc

    t = threading.Thread(target=other)
    t.start()
    try:
        out_b = handshake(b, p_b)
    except SessionAbort as exc:
        out_b = exc
    t.join()
    return box["a"], out_b


def test_identical_configs_agree():
    a, b = _both(BASE, BASE)
    assert a == b == BASE


@pytest.mark.parametrize("change,reason", [
    ({"kappa": 128}, AbortReason.PARAM_MISMATCH),
    ({"m": 101}, AbortReason.PARAM_MISMATCH),
    ({"batch_size": 1024}, AbortReason.PARAM_MISMATCH),
    ({"mode": "semi-honest", "mu": 0}, AbortReason.MODE_MISMATCH),
])
def test_mismatch_refused(change, reason):
    a, b = _both(BASE, BASE.replace(**change))
    assert isinstance(a, HandshakeRefused) and a.reason == reason
    assert isinstance(b, HandshakeRefused) and b.reason == reason


def _fake_peer(hello: Hello):
    a, b = channel_pair()
    box = {}

    def run():
        try:
            handshake(a, BASE)
        except SessionAbort as exc:
            box["exc"] = exc

    t = threading.Thread(target=run)
    t.start()
    b.send(MsgType.HELLO, hello.pack())
    b.recv(MsgType.HELLO)
    msg_type, payload = b.recv_any()
    t.join()
    return box["exc"], msg_type, decode_abort(payload)


def test_n_above_kappa_is_invalid():
    h = hello_for(BASE)
    bad = Hello(h.version, h.mode, h.kappa, h.mu, h.m, 512, h.ell, h.batch_size)
    exc, msg_type, reason = _fake_peer(bad)
    assert msg_type == MsgType.ABORT
    assert reason == exc.reason == AbortReason.INVALID_PARAMS


def test_version_mismatch():
    h = hello_for(BASE, version=9)
    exc, _, reason = _fake_peer(h)
    assert reason == AbortReason.VERSION_MISMATCH


def test_hello_round_trip():
    h = hello_for(BASE)
    assert len(h.pack()) == HELLO.size == 23
    assert Hello.unpack(h.pack()) == h
    assert params_from_hello(h) == BASE
    with pytest.raises(ProtocolError):
        Hello.unpack(b"\x00" * 5)


@pytest.mark.parametrize("kwargs", [
    {"m": 0, "n": 2, "ell": 1},
    {"m": 1, "n": 3, "ell": 1},
    {"m": 1, "n": 512, "ell": 1},
    {"m": 1, "n": 2, "ell": 0},
    {"m": 1, "n": 2, "ell": 1, "kappa": 12},
    {"m": 1, "n": 2, "ell": 1, "mu": 0},
    {"m": 1, "n": 2, "ell": 1, "mode": "semi-honest"},
])
def test_params_validation(kwargs):
    with pytest.raises(ParameterError):
        Params(**kwargs)


def test_session_config_validation():
    SessionConfig("sender", BASE, listen="127.0.0.1:1")
    with pytest.raises(ParameterError):
        SessionConfig("sender", BASE)
    with pytest.raises(ParameterError):
        SessionConfig("judge", BASE, connect="x:1")


def test_framing_and_accounting():
    a, b = channel_pair(record=True)
    a.send(MsgType.MATRIX_D, b"\x01\x02\x03")
    a.send(MsgType.SEEDPAIRS_ACK)
    assert b.recv(MsgType.MATRIX_D) == b"\x01\x02\x03"
    assert b.recv(MsgType.SEEDPAIRS_ACK) == b""
    for ch in (a, b):
        assert ch.counts["matrix_d"] == 3
        assert ch.counts["framing"] == 10
    assert [t for _, t, _ in b.transcript] == [MsgType.MATRIX_D, MsgType.SEEDPAIRS_ACK]


def test_unexpected_message_and_abort():
    a, b = channel_pair()
    a.send(MsgType.CHECKS, b"")
    with pytest.raises(ProtocolError):
        b.recv(MsgType.MASKED)
    a.send_abort(AbortReason.CHECK_FAILED)
    with pytest.raises(SessionAbort) as exc:
        b.recv(MsgType.MASKED)
    assert exc.value.remote and exc.value.reason == AbortReason.CHECK_FAILED


def test_closed_peer_is_transport_error():
    a, b = channel_pair()
    a.close()
    with pytest.raises(TransportError):
        b.recv(MsgType.HELLO)


def test_tcp_listen_connect():
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        port = s.getsockname()[1]
    box = {}
    t = threading.Thread(target=lambda: box.setdefault("ch", listen(f"127.0.0.1:{port}", timeout=10)))
    t.start()
    client = connect(f"127.0.0.1:{port}", timeout=10)
    t.join()
    client.send(MsgType.HELLO, b"hi")
    assert box["ch"].recv(MsgType.HELLO) == b"hi"
    client.close()
    box["ch"].close()
    assert parse_endpoint(":80") == ("127.0.0.1", 80)
    with pytest.raises(ValueError):
        parse_endpoint("nohost")
    assert isinstance(client, Channel)
