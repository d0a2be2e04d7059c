"""Malicious-receiver strategies and the choice-extraction oracle.

The semi-honest mode leaks the sender's secret ``s`` to a receiver that
commits to almost-codewords: if row ``i`` of ``E`` is ``c_{r_i}`` with bit
``i`` flipped, the pad of the chosen input is ``H(i, b_i xor s_i e_i)``, so
one known chosen input and two oracle queries reveal ``s_i``.  With all of
``s`` the receiver recomputes every pad.

The active mode catches this through the consistency checks; the extraction
routine mirrors what a simulator does with a committed ``E``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..baseot import BaseOTProvider, IdealDealer
from ..bitops import BitMatrix, BitVector, row_parities, xor_reduce_rows
from ..crypto import coin_toss, ro_mask, ro_mask_many
from ..errors import DimensionError, InconsistentTranscriptError, ParameterError, SessionAbort
from ..net import handshake
from ..otext import (
    CheckTuple,
    codeword_rows,
    padding_codewords,
    random_seed_pairs,
    receiver_phase1_from_rows,
    unpack_masked,
    validate_choices,
)
from ..params import Params
from ..wire import Channel, MsgType, pack_checks
from ..whcode import WHCode, _lookup, _packed_table, build_code


@dataclass(frozen=True)
class TweakSpec:
    """Bit flips applied to an honest ``E``: ``(row, positions)`` pairs, all 1-based."""

    flips: tuple[tuple[int, tuple[int, ...]], ...]

    def rows(self) -> tuple[int, ...]:
        return tuple(row for row, _ in self.flips)

    def position_of(self) -> dict[int, int]:
        """Row -> flipped position, for single-flip rows."""
        return {row: pos[0] for row, pos in self.flips if len(pos) == 1}

    def apply(self, e_rows: np.ndarray, kappa: int) -> np.ndarray:
        out = np.array(e_rows, dtype=np.uint8, copy=True)
        for row, positions in self.flips:
            if not 1 <= row <= out.shape[0]:
                raise ParameterError(f"tweak row {row} outside 1..{out.shape[0]}")
            for p in positions:
                if not 1 <= p <= kappa:
                    raise ParameterError(f"tweak position {p} outside 1..{kappa}")
                out[row - 1, (p - 1) >> 3] ^= 1 << ((p - 1) & 7)
        return out


def build_tweaked_E(r, kappa: int, m: int | None = None, copies: int = 1) -> tuple[TweakSpec, BitMatrix]:
    """Honest codeword rows for ``r`` with row ``i <= kappa`` flipped at position ``i``.

    ``copies > 1`` also flips rows ``t*kappa + i`` at position ``i`` (spare
    rows used to settle ambiguous pad matches).  With ``m < kappa`` only the
    first ``m`` positions are covered.
    """
    r = validate_choices(r, kappa)
    m = r.size if m is None else m
    if r.size != m:
        raise DimensionError(f"need {m} choices, got {r.size}")
    flips = []
    for t in range(max(1, copies)):
        for i in range(1, kappa + 1):
            row = t * kappa + i
            if row > m:
                break
            flips.append((row, (i,)))
    spec = TweakSpec(tuple(flips))
    rows = spec.apply(codeword_rows(kappa, r), kappa)
    return spec, BitMatrix.from_row_array(rows, m, kappa)


class OracleCounter:
    """Counts random-oracle queries made by the attacker."""

    def __init__(self):
        self.queries = 0

    def one(self, index: int, row: BitVector, ell: int) -> BitVector:
        self.queries += 1
        return ro_mask(index, row, ell)

    def many(self, indices: np.ndarray, rows: np.ndarray, ell: int) -> np.ndarray:
        self.queries += len(indices)
        return ro_mask_many(indices, rows, ell)


def recover_s_bit(i: int, b_i: BitVector, y_chosen: BitVector, x_chosen: BitVector, *, position: int | None = None,
                  oracle: OracleCounter | None = None) -> int | None:
    """Guess ``s_position`` from one tweaked row with two oracle queries.

    ``i`` is the global oracle index of the row, ``position`` the flipped bit
    (defaults to ``i``).  Returns ``None`` when both candidates match the pad.
    """
    oracle = oracle or OracleCounter()
    position = i if position is None else position
    ell = len(y_chosen)
    pad = y_chosen ^ x_chosen
    hits = [oracle.one(i, b_i, ell) == pad, oracle.one(i, b_i.flip(position - 1), ell) == pad]
    if hits[0] and hits[1]:
        return None
    if not (hits[0] or hits[1]):
        raise InconsistentTranscriptError(f"row {i}: neither candidate pad matches")
    return 0 if hits[0] else 1


@dataclass
class AttackReport:
    s_batches: list[BitVector | None] = field(default_factory=list)
    inputs: np.ndarray | None = None
    queries_s: int = 0
    queries_unmask: int = 0
    aborted: bool = False
    abort_reason: str | None = None
    mode_of_peer: str = ""
    unresolved: int = 0
    known_bits: list[dict[int, int]] = field(default_factory=list)

    @property
    def s_recovered(self) -> BitVector | None:
        return self.s_batches[0] if self.s_batches else None

    @property
    def queries_used(self) -> int:
        return self.queries_s + self.queries_unmask

    def inputs_match(self, truth: np.ndarray) -> bool:
        return self.inputs is not None and not self.aborted and np.array_equal(self.inputs, np.asarray(truth))

    def to_dict(self, truth: np.ndarray | None = None) -> dict:
        s = self.s_recovered
        return {
            "s_recovered": s.hex() if s is not None else None,
            "s_batches": [v.hex() if v is not None else None for v in self.s_batches],
            "queries_used": self.queries_used,
            "queries_s": self.queries_s,
            "queries_unmask": self.queries_unmask,
            "inputs_matched": bool(truth is not None and self.inputs_match(truth)),
            "mode_of_peer": self.mode_of_peer,
            "aborted": self.aborted,
            "abort_reason": self.abort_reason,
        }


def _recover_s(params: Params, spec: TweakSpec, b_rows, y, known, r, offset, oracle
               ) -> tuple[BitVector | None, dict[int, int], int]:
    kappa, ell = params.kappa, params.ell
    by_position: dict[int, list[int]] = {}
    for row, pos in spec.position_of().items():
        by_position.setdefault(pos, []).append(row)
    bits = {}
    unresolved = 0
    for pos in range(1, kappa + 1):
        for row in sorted(by_position.get(pos, ())):
            k = row - 1
            bit = recover_s_bit(
                offset + row,
                BitVector.from_bytes(b_rows[k].tobytes(), kappa),
                BitVector.from_bytes(y[k, r[k] - 1].tobytes(), ell),
                BitVector.from_bytes(known[k].tobytes(), ell),
                position=pos,
                oracle=oracle,
            )
            if bit is not None:
                bits[pos] = bit
                break
        else:
            unresolved += 1
    if len(bits) < kappa:
        return None, bits, unresolved
    return BitVector.from_bits(bits[p] for p in range(1, kappa + 1)), bits, 0


def _unmask(params: Params, s: BitVector, b_rows, e_rows, y, known, r, spec, offset, oracle) -> np.ndarray:
    """All inputs of the batch: recomputed pads for ``j != r_i``, honest output otherwise."""
    size = y.shape[0]
    table = _packed_table(params.kappa)[: params.n]
    s_bytes = np.frombuffer(s.to_bytes(), dtype=np.uint8)
    inputs = b_rows[:size, None, :] ^ ((e_rows[:size, None, :] ^ table[None, :, :]) & s_bytes)
    other = np.ones((size, params.n), dtype=bool)
    other[np.arange(size), r - 1] = False
    rows_i, cols_j = np.nonzero(other)
    pads = oracle.many((offset + rows_i + 1).astype(np.uint64), inputs[rows_i, cols_j], params.ell)
    out = np.empty_like(y)
    out[rows_i, cols_j] = y[rows_i, cols_j] ^ pads
    tweaked = np.zeros(size, dtype=bool)
    tweaked[np.asarray(spec.rows(), dtype=np.int64) - 1] = True
    chosen = np.arange(size)
    # the chosen input on an honest row is just the receiver's normal output
    honest_pads = ro_mask_many((offset + chosen + 1).astype(np.uint64), b_rows[:size], params.ell)
    out[chosen, r - 1] = np.where(tweaked[:, None], known, y[chosen, r - 1] ^ honest_pads)
    return out


def full_attack(channel: Channel, params: Params, known_chosen, choices=None, *, rng: np.random.Generator | None = None,
                copies: int | None = None, base_ot: BaseOTProvider | None = None) -> AttackReport:
    """Play the receiver with tweaked ``E`` rows and recover the sender's inputs.

    ``known_chosen`` is ``x_{i,r_i}`` for every row (shape ``(m, ceil(ell/8))``);
    only tweaked rows are read.  Against an active peer the attacker answers
    the checks with the nearest codeword and the honest ``B`` parity, and the
    report records the abort.
    """
    base_ot = base_ot or IdealDealer()
    r_all = validate_choices(np.ones(params.m, dtype=np.int64) if choices is None else choices, params.n)
    known = np.asarray(known_chosen, dtype=np.uint8).reshape(params.m, params.value_bytes)
    if copies is None:
        copies = max(1, min(params.batch_size // params.kappa, 4))
    oracle_s, oracle_u = OracleCounter(), OracleCounter()
    report = AttackReport(mode_of_peer=params.mode)
    inputs = np.zeros((params.m, params.n, params.value_bytes), dtype=np.uint8)
    try:
        handshake(channel, params)
        for offset, size in params.batches():
            r = r_all[offset:offset + size]
            pairs = random_seed_pairs(params.kappa, rng)
            base_ot.send_pairs(channel, pairs)
            spec, e_bar = build_tweaked_E(r, params.kappa, size, copies=copies)
            pads = codeword_rows(params.kappa, padding_codewords(params.kappa, params.mu, rng))
            e_rows = np.concatenate([e_bar.row_array(), pads])
            state = receiver_phase1_from_rows(params, pairs, e_rows)
            channel.send(MsgType.MATRIX_D, state.D.to_bytes())
            if params.is_active:
                W = coin_toss(channel, "receiver", params.kappa, params.mu, state.rows, rng)
                channel.send(MsgType.CHECKS, pack_checks(forged_checks(state.e_rows, state.b_rows, W, params.kappa)))
            y = unpack_masked(channel.recv(MsgType.MASKED), size, params.n, params.ell)
            s, bits, unresolved = _recover_s(params, spec, state.b_rows, y, known[offset:offset + size], r, offset,
                                             oracle_s)
            report.s_batches.append(s)
            report.known_bits.append(bits)
            report.unresolved += unresolved
            if s is not None:
                inputs[offset:offset + size] = _unmask(params, s, state.b_rows, state.e_rows, y,
                                                       known[offset:offset + size], r, spec, offset, oracle_u)
    except SessionAbort as exc:
        report.aborted = True
        report.abort_reason = exc.reason.name
    report.queries_s = oracle_s.queries
    report.queries_unmask = oracle_u.queries
    if not report.aborted and all(s is not None for s in report.s_batches):
        report.inputs = inputs
    return report


def attack_local(params: Params, inputs: np.ndarray, choices, *, sender_rng=None, attacker_rng=None,
                 copies: int | None = None) -> tuple[AttackReport, BaseException | None]:
    """Run :func:`full_attack` against an honest in-process sender.

    The attacker is provisioned with the chosen inputs ``x_{i,r_i}``.
    Returns the report and the sender's exception (if it aborted).
    """
    import threading

    from ..otext import run_sender
    from ..wire import channel_pair

    r = validate_choices(choices, params.n)
    inputs = np.asarray(inputs, dtype=np.uint8)
    known = inputs[np.arange(params.m), r - 1]
    s_chan, a_chan = channel_pair()
    box: dict = {}

    def sender():
        try:
            run_sender(s_chan, params, inputs, rng=sender_rng)
        except BaseException as exc:  # reported to the caller
            box["error"] = exc

    worker = threading.Thread(target=sender, name="whot-honest-sender", daemon=True)
    worker.start()
    try:
        report = full_attack(a_chan, params, known, r, rng=attacker_rng, copies=copies)
    finally:
        a_chan.close()
        worker.join()
        s_chan.close()
    return report, box.get("error")


def forged_checks(e_rows: np.ndarray, b_rows: np.ndarray, W: np.ndarray, kappa: int) -> list[CheckTuple]:
    """Best-effort check answers for a tampered ``E``: nearest codeword, honest ``B`` parity."""
    W = np.asarray(W, dtype=np.uint8)
    b_bits = (W.astype(np.int64) @ row_parities(b_rows).astype(np.int64)) & 1
    table = _packed_table(kappa)
    lookup = _lookup(kappa)
    out = []
    for l in range(W.shape[0]):
        combined = xor_reduce_rows(e_rows, W[l])
        alpha = lookup.get(int.from_bytes(combined.tobytes(), "little"))
        if alpha is None:
            dist = np.bitwise_count(table ^ combined).sum(axis=1)
            alpha = int(np.argmin(dist)) + 1
        out.append(CheckTuple(alpha, int(b_bits[l])))
    return out


# ---------------------------------------------------------------------------
# extraction


@dataclass(frozen=True)
class ExtractionResult:
    aborted: bool
    T: tuple[int, ...] = ()
    choices: np.ndarray | None = None
    reason: str = ""


def _row_values(E) -> list[int]:
    if isinstance(E, BitMatrix):
        return [int.from_bytes(row.tobytes(), "little") for row in E.row_array()]
    if isinstance(E, np.ndarray):
        return [int.from_bytes(row.tobytes(), "little") for row in E]
    return [v.value if isinstance(v, BitVector) else int(v) for v in E]


def extract_choices(E, W, tuples, code: WHCode, m: int | None = None) -> ExtractionResult:
    """Recover the receiver's choices from a committed ``E`` and passing check tuples.

    ``E`` is a :class:`BitMatrix`, a packed row array, or a sequence of rows.
    ``T`` is the union of disagreement positions between every combined row
    and its announced codeword.  Extraction aborts when ``|T| >= kappa/2`` or
    when some row, with ``T`` pruned, is not a pruned codeword.  All rows
    (padding included) must decode; the first ``m`` are returned.

    Pruned decoding is done with masks: ``prune(e, T) == prune(c, T)`` iff
    ``e`` and ``c`` agree outside ``T``.
    """
    kappa = code.kappa
    rows = _row_values(E)
    W = np.asarray(W, dtype=np.uint8)
    if W.ndim != 2 or W.shape[1] != len(rows):
        raise DimensionError(f"combiners must have {len(rows)} columns")
    if len(tuples) != W.shape[0]:
        raise DimensionError(f"expected {W.shape[0]} tuples, got {len(tuples)}")
    m = len(rows) - W.shape[0] if m is None else m
    values = [c.value for c in code.codewords]
    t_mask = 0
    for l, t in enumerate(tuples):
        alpha = t.alpha if isinstance(t, CheckTuple) else t[0]
        if not 1 <= alpha <= kappa:
            raise ParameterError(f"alpha {alpha} outside 1..{kappa}")
        combined = 0
        for bit, row in zip(W[l].tolist(), rows):
            if bit:
                combined ^= row
        t_mask |= combined ^ values[alpha - 1]
    T = tuple(i + 1 for i in range(kappa) if t_mask >> i & 1)
    if len(T) >= kappa // 2:
        return ExtractionResult(True, T, reason="|T| >= kappa/2")
    keep = ((1 << kappa) - 1) ^ t_mask
    table = {}
    for r, c in enumerate(values, start=1):
        table.setdefault(c & keep, r)
    decoded = []
    for i, row in enumerate(rows):
        r = table.get(row & keep)
        if r is None:
            return ExtractionResult(True, T, reason=f"row {i + 1} is not a pruned codeword")
        decoded.append(r)
    return ExtractionResult(False, T, np.asarray(decoded[:m], dtype=np.int64))


def committed_E(seed_pairs, D: BitMatrix) -> BitMatrix:
    """``e^j = G(k^0_j) xor G(k^1_j) xor d^j``, as a simulator holding both seeds computes it."""
    from ..crypto import prg_columns

    rows = D.rows
    g0 = prg_columns([k0 for k0, _ in seed_pairs.pairs], rows)
    g1 = prg_columns([k1 for _, k1 in seed_pairs.pairs], rows)
    cols = g0 ^ g1 ^ D.column_array
    return BitMatrix(rows, D.cols, cols.copy())


def passes_checks(e_rows: np.ndarray, b_rows: np.ndarray, s: BitVector, W, tuples, kappa: int) -> bool:
    """Whether an honest sender with secret ``s`` accepts every tuple."""
    code = build_code(kappa)
    a_rows = b_rows ^ (e_rows & np.frombuffer(s.to_bytes(), dtype=np.uint8))
    W = np.asarray(W, dtype=np.uint8)
    a_bits = (W.astype(np.int64) @ row_parities(a_rows).astype(np.int64)) & 1
    for l, t in enumerate(tuples):
        alpha, b = (t.alpha, t.b) if isinstance(t, CheckTuple) else t
        p = (s.value & code[alpha].value).bit_count() & 1
        if int(a_bits[l]) != b ^ p:
            return False
    return True


__all__ = [
    "AttackReport",
    "ExtractionResult",
    "OracleCounter",
    "TweakSpec",
    "attack_local",
    "build_tweaked_E",
    "committed_E",
    "extract_choices",
    "forged_checks",
    "full_attack",
    "passes_checks",
    "recover_s_bit",
]
