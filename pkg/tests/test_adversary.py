import os
import subprocess
import sys

import numpy as np
import pytest

from whot.bitops import BitMatrix, BitVector
from whot.crypto import ro_mask
from whot.errors import InconsistentTranscriptError
from whot.insecure.adversary import (
    OracleCounter,
    TweakSpec,
    attack_local,
    build_tweaked_E,
    committed_E,
    extract_choices,
    forged_checks,
    passes_checks,
    recover_s_bit,
)
from whot.otext import random_inputs, random_s, random_seed_pairs, receiver_check, receiver_phase1
from whot.params import Params
from whot.whcode import build_code, hdi


def test_gate_blocks_import_without_env():
    env = {k: v for k, v in os.environ.items() if k != "WHOT_INSECURE"}
    proc = subprocess.run([sys.executable, "-c", "import whot.insecure"], env=env, capture_output=True, text=True)
    assert proc.returncode != 0 and "WHOT_INSECURE" in proc.stderr


def test_tweaked_rows(rng):
    code = build_code(16)
    r = rng.integers(1, 5, 40)
    spec, E = build_tweaked_E(r, 16, 40)
    assert E.rows == 40 and len(spec.flips) == 16
    assert hdi(E.get_row(0), code[int(r[0])]) == (1,)
    for i in range(16):
        assert hdi(E.get_row(i), code[int(r[i])]) == (i + 1,)
    for i in range(16, 40):
        assert E.get_row(i) == code[int(r[i])]


def test_tweaked_copies_and_short_batches(rng):
    r = np.ones(20, dtype=int)
    spec, _ = build_tweaked_E(r, 8, 20, copies=3)
    assert spec.rows() == tuple(range(1, 21))
    assert spec.position_of()[17] == 1
    spec, E = build_tweaked_E(np.ones(5, dtype=int), 8, 5)
    assert len(spec.flips) == 5


def test_tweak_spec_apply():
    rows = np.zeros((2, 1), dtype=np.uint8)
    out = TweakSpec(((2, (1, 8)),)).apply(rows, 8)
    assert out[1, 0] == 0x81 and out[0, 0] == 0


@pytest.mark.parametrize("s_bit", [0, 1])
def test_recover_s_bit_planted(rng, s_bit):
    b = BitVector.from_bytes(rng.bytes(2), 16)
    x = BitVector(8, 0x5A)
    i = 5
    row = b.flip(i - 1) if s_bit else b
    y = x ^ ro_mask(i, row, 8)
    oracle = OracleCounter()
    assert recover_s_bit(i, b, y, x, oracle=oracle) == s_bit
    assert oracle.queries == 2


def test_recover_s_bit_inconsistent(rng):
    b = BitVector.from_bytes(rng.bytes(2), 16)
    x = BitVector(64, 1)
    y = x ^ ro_mask(3, b, 64) ^ BitVector(64, 1 << 40)
    with pytest.raises(InconsistentTranscriptError):
        recover_s_bit(3, b, y, x)


def test_attack_kappa8_sixteen_queries(rng):
    p = Params.create(m=8, n=2, ell=16, kappa=8, mode="semi-honest")
    x = random_inputs(p, rng)
    report, err = attack_local(p, x, np.ones(8, dtype=int), sender_rng=rng, copies=1)
    assert err is None
    assert report.s_recovered is not None
    assert report.queries_s == 16
    assert report.queries_unmask == 8
    assert report.inputs_match(x)


def test_attack_recovers_s_exactly(rng):
    p = Params.create(m=64, n=4, ell=8, kappa=16, mode="semi-honest")
    x = random_inputs(p, rng)
    r = rng.integers(1, 5, 64)
    seed = 77
    report, err = attack_local(p, x, r, sender_rng=np.random.default_rng(seed))
    assert err is None and report.inputs_match(x)
    # the sender draws its secret first, so it can be replayed from the seed
    assert report.s_recovered == random_s(16, np.random.default_rng(seed))


def test_attack_partial_when_m_below_kappa(rng):
    p = Params.create(m=5, n=2, ell=32, kappa=16, mode="semi-honest")
    x = random_inputs(p, rng)
    report, err = attack_local(p, x, np.ones(5, dtype=int), sender_rng=np.random.default_rng(3))
    s = random_s(16, np.random.default_rng(3))
    assert err is None and report.s_recovered is None
    assert report.known_bits[0] == {k: s[k - 1] for k in range(1, 6)}
    assert report.queries_s == 10


def test_attack_ambiguity_settled_by_spare_rows(rng):
    # with ell = 1 half of the pad pairs collide; spare rows resolve them
    p = Params.create(m=16 * 24, n=2, ell=1, kappa=16, mode="semi-honest", batch_size=16 * 24)
    x = random_inputs(p, rng)
    report, err = attack_local(p, x, np.ones(p.m, dtype=int), sender_rng=rng, copies=24)
    assert err is None
    assert report.queries_s > 2 * 16
    assert report.inputs_match(x)


def test_attack_multi_batch(rng):
    p = Params.create(m=100, n=4, ell=8, kappa=16, mode="semi-honest", batch_size=40)
    x = random_inputs(p, rng)
    report, err = attack_local(p, x, rng.integers(1, 5, 100), sender_rng=rng)
    assert err is None and len(report.s_batches) == 3
    assert report.inputs_match(x)


def test_attack_on_active_aborts(rng):
    p = Params(m=64, n=4, ell=8, kappa=16, mu=16)
    x = random_inputs(p, rng)
    report, err = attack_local(p, x, rng.integers(1, 5, 64), sender_rng=rng, attacker_rng=rng)
    assert report.aborted and report.abort_reason == "CHECK_FAILED"
    assert err is not None and report.inputs is None


def test_extract_honest_is_left_inverse(rng):
    code = build_code(16)
    p = Params(m=30, n=16, ell=4, kappa=16, mu=6)
    pairs = random_seed_pairs(16, rng)
    r = rng.integers(1, 17, 30)
    state, D = receiver_phase1(p, pairs, r, rng)
    W = rng.integers(0, 2, (6, 36)).astype(np.uint8)
    res = extract_choices(committed_E(pairs, D), W, receiver_check(state, W), code)
    assert not res.aborted and res.T == ()
    assert np.array_equal(res.choices, r)


def test_extract_aborts_on_large_T(rng):
    code = build_code(8)
    r = rng.integers(1, 9, 8)
    _, E = build_tweaked_E(r, 8, 8)
    W = np.eye(8, dtype=np.uint8)  # each check isolates one tweaked row
    tuples = forged_checks(E.row_array(), np.zeros((8, 1), np.uint8), W, 8)
    res = extract_choices(E, W, tuples, code)
    assert res.aborted and len(res.T) == 8


def test_extract_prunes_small_T(rng):
    code = build_code(16)
    r = rng.integers(1, 17, 12)
    rows = code.packed()[r - 1].copy()
    rows[4, 0] ^= 0x02  # position 2
    E = BitMatrix.from_row_array(rows, 12, 16)
    W = np.zeros((2, 12), dtype=np.uint8)
    W[0, 4] = 1
    W[1, [1, 4, 7]] = 1
    res = extract_choices(E, W, forged_checks(rows, np.zeros_like(rows), W, 16), code, m=12)
    assert not res.aborted and res.T == (2,)
    assert np.array_equal(res.choices, r)


def test_passes_checks_matches_sender(rng):
    code = build_code(8)
    rows = code.packed()[rng.integers(0, 8, 10)].copy()
    b_rows = np.frombuffer(rng.bytes(10), dtype=np.uint8).reshape(10, 1)
    W = np.eye(10, dtype=np.uint8)[:3]
    tuples = forged_checks(rows, b_rows, W, 8)
    assert passes_checks(rows, b_rows, random_s(8, rng), W, tuples, 8)
