import json
import os
import socket
import subprocess
import sys

import numpy as np
import pytest

from whot.cli import EXIT_TRANSPORT, EXIT_USAGE, run_cli


def _port():
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def _pair(listen_args, connect_args, env=None):
    port = _port()
    cmd = [sys.executable, "-m", "whot", "--timeout", "30"]
    env = {**os.environ, **(env or {})}
    server = subprocess.Popen(cmd + listen_args + ["--listen", f"127.0.0.1:{port}"], env=env,
                              stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True)
    client = subprocess.run(cmd + connect_args + ["--connect", f"127.0.0.1:{port}"], env=env,
                            capture_output=True, text=True, timeout=120)
    out, err = server.communicate(timeout=120)
    return (server.returncode, out, err), (client.returncode, client.stdout, client.stderr)


@pytest.fixture
def files(tmp_path):
    rng = np.random.default_rng(5)
    m, n = 1000, 16
    x = rng.integers(0, 16, (m, n)).tolist()
    r = rng.integers(1, n + 1, m).tolist()
    (tmp_path / "in.json").write_text(json.dumps(x))
    (tmp_path / "ch.json").write_text(json.dumps(r))
    return tmp_path, x, r


def test_loopback_active(files):
    tmp, x, r = files
    common = ["--m", "1000", "--n", "16", "--ell", "4"]
    snd, rcv = _pair(
        ["--role", "sender", "--input-file", str(tmp / "in.json"), "--stats-json", str(tmp / "s.json")] + common,
        ["--role", "receiver", "--choices-file", str(tmp / "ch.json"), "--output-file", str(tmp / "out.json"),
         "--stats-json", str(tmp / "r.json")] + common,
    )
    assert snd[0] == 0 and rcv[0] == 0, (snd, rcv)
    z = json.loads((tmp / "out.json").read_text())
    assert z == [x[i][r[i] - 1] for i in range(1000)]
    s_stats = json.loads((tmp / "s.json").read_text())
    r_stats = json.loads((tmp / "r.json").read_text())
    assert s_stats["bytes"] == r_stats["bytes"]
    assert s_stats["mode"] == "active" and not s_stats["aborted"]


def _attack_files(tmp):
    rng = np.random.default_rng(6)
    x = rng.integers(0, 256, (64, 4)).tolist()
    (tmp / "x.json").write_text(json.dumps(x))
    return ["--m", "64", "--n", "4", "--ell", "8", "--kappa", "16", "--mu", "16"]


@pytest.mark.parametrize("mode,code,matched", [("semi-honest", 0, True), ("active", 2, False)])
def test_attacker_role(tmp_path, mode, code, matched):
    common = _attack_files(tmp_path) + ["--mode", mode]
    snd, att = _pair(
        ["--role", "sender", "--input-file", str(tmp_path / "x.json")] + common,
        ["--role", "attacker", "--input-file", str(tmp_path / "x.json"), "--seed", "1",
         "--report-json", str(tmp_path / "rep.json")] + common,
        env={"WHOT_INSECURE": "1"},
    )
    assert att[0] == code, att
    report = json.loads((tmp_path / "rep.json").read_text())
    assert {"s_recovered", "queries_used", "inputs_matched", "mode_of_peer", "aborted"} <= set(report)
    assert report["inputs_matched"] is matched
    assert report["aborted"] is (not matched)
    assert report["mode_of_peer"] == mode
    if matched:
        assert report["queries_used"] == 2 * 16 + 64 * 3
    else:
        assert snd[0] == 2


def test_handshake_mismatch_exit_code(tmp_path):
    common = ["--m", "10", "--n", "4", "--ell", "4", "--kappa", "16", "--mu", "4"]
    snd, rcv = _pair(["--role", "sender"] + common, ["--role", "receiver", "--mu", "5"] + common[:-2])
    assert snd[0] == 2 and rcv[0] == 2
    assert "PARAM_MISMATCH" in snd[2]


@pytest.mark.parametrize("argv", [
    [],
    ["--role", "sender", "--m", "0", "--n", "2", "--ell", "1", "--listen", ":1"],
    ["--role", "sender", "--m", "4", "--n", "3", "--ell", "1", "--listen", ":1"],
    ["--role", "sender", "--m", "4", "--n", "2", "--ell", "1"],
    ["--role", "receiver", "--m", "4", "--n", "2", "--ell", "1", "--connect", "nohost"],
])
def test_usage_errors(argv, capsys):
    assert run_cli(argv) == EXIT_USAGE


def test_attacker_needs_gate(monkeypatch):
    monkeypatch.delenv("WHOT_INSECURE", raising=False)
    argv = ["--role", "attacker", "--m", "4", "--n", "2", "--ell", "1", "--connect", ":1", "--input-file", "x"]
    assert run_cli(argv) == EXIT_USAGE


def test_transport_error():
    argv = ["--role", "receiver", "--m", "4", "--n", "2", "--ell", "1", "--kappa", "8", "--mu", "1",
            "--connect", f"127.0.0.1:{_port()}", "--timeout", "0.3"]
    assert run_cli(argv) == EXIT_TRANSPORT
