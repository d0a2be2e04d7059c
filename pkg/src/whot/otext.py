"""1-out-of-n OT extension over Walsh-Hadamard codewords.

One batch runs four phases:

1. seed OTs: the receiver holds ``kappa`` seed pairs, the sender learns
   ``k^{s_j}_j`` for its secret ``s``;
2. phase I: the receiver expands the seeds into ``B``, encodes its choices as
   codeword rows of ``E`` (plus ``mu`` random codeword rows in active mode)
   and sends ``D = B xor G(k^1) xor E`` column by column; the sender derives
   ``A`` with ``a_i = b_i xor (s & e_i)``;
3. checks (active mode only): both parties agree on ``mu`` random combiners;
   the receiver reveals the index of every combined ``E`` row and the parity
   of the combined ``B`` row, the sender compares against ``A`` and aborts on
   the first mismatch;
4. phase II: the sender masks ``x_{i,j}`` with ``H(i, a_i xor (s & c_j))``,
   the receiver unmasks its choice with ``H(i, b_i)``.

Semi-honest mode is the same flow without padding rows and checks.

Matrices are handled as packed numpy arrays: ``*_rows`` arrays have shape
``(rows, kappa/8)`` and ``*_cols`` arrays ``(kappa, ceil(rows/8))``.
"""

from __future__ import annotations

import time
from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np

from .baseot import BaseOTProvider, IdealDealer, SeedPairs
from .bitops import BitMatrix, BitVector, nbytes_for, pack_bits, row_parities, transpose_packed, unpack_bits, xor_reduce_rows
from .crypto import coin_toss, prg_columns, random_bytes, ro_mask_many
from .errors import AbortReason, CheckFailed, DimensionError, ParameterError, ProtocolError, SessionAbort, WhotError
from .net import handshake
from .params import Params
from .stats import TranscriptStats
from .wire import CATEGORIES, Channel, MsgType, pack_checks, unpack_checks
from .whcode import _lookup, _packed_table, build_code

PHASE2_CHUNK = 8192


@dataclass(frozen=True)
class CheckTuple:
    alpha: int
    b: int


@dataclass
class ReceiverState:
    params: Params
    seed_pairs: SeedPairs
    b_rows: np.ndarray
    e_rows: np.ndarray
    d_cols: np.ndarray

    @property
    def rows(self) -> int:
        return self.b_rows.shape[0]

    @property
    def B(self) -> BitMatrix:
        return BitMatrix.from_row_array(self.b_rows, self.rows, self.params.kappa)

    @property
    def E(self) -> BitMatrix:
        return BitMatrix.from_row_array(self.e_rows, self.rows, self.params.kappa)

    @property
    def D(self) -> BitMatrix:
        return BitMatrix(self.rows, self.params.kappa, self.d_cols)


@dataclass
class SenderState:
    params: Params
    s: BitVector
    a_rows: np.ndarray

    @property
    def rows(self) -> int:
        return self.a_rows.shape[0]

    @property
    def A(self) -> BitMatrix:
        return BitMatrix.from_row_array(self.a_rows, self.rows, self.params.kappa)


def random_seed_pairs(kappa: int, rng: np.random.Generator | None = None) -> SeedPairs:
    width = nbytes_for(kappa)
    raw = random_bytes(rng, 2 * kappa * width)
    pairs = tuple((raw[2 * j * width:(2 * j + 1) * width], raw[(2 * j + 1) * width:(2 * j + 2) * width])
                  for j in range(kappa))
    return SeedPairs(kappa, pairs)


def random_s(kappa: int, rng: np.random.Generator | None = None) -> BitVector:
    return BitVector.from_bytes(random_bytes(rng, nbytes_for(kappa)), kappa)


def validate_choices(choices, n: int) -> np.ndarray:
    r = np.asarray(choices, dtype=np.int64).reshape(-1)
    if r.size and (r.min() < 1 or r.max() > n):
        raise ParameterError(f"choices must lie in [1, {n}]")
    return r


def padding_codewords(kappa: int, count: int, rng: np.random.Generator | None = None) -> np.ndarray:
    """``count`` uniformly random codeword indices (1-based)."""
    if count == 0:
        return np.zeros(0, dtype=np.int64)
    raw = np.frombuffer(random_bytes(rng, 4 * count), dtype="<u4").astype(np.int64)
    return raw % kappa + 1  # kappa is a power of two, so this is uniform


def codeword_rows(kappa: int, indices: np.ndarray) -> np.ndarray:
    return _packed_table(kappa)[np.asarray(indices, dtype=np.int64) - 1]


# ---------------------------------------------------------------------------
# phase I


def receiver_phase1_from_rows(params: Params, seed_pairs: SeedPairs, e_rows: np.ndarray) -> ReceiverState:
    """Phase I for an explicit ``E`` (one packed row per extended OT plus padding)."""
    kappa = params.kappa
    rows = e_rows.shape[0]
    if e_rows.shape[1] != nbytes_for(kappa):
        raise DimensionError(f"E rows must be {nbytes_for(kappa)} bytes")
    b_cols = prg_columns([k0 for k0, _ in seed_pairs.pairs], rows)
    g1_cols = prg_columns([k1 for _, k1 in seed_pairs.pairs], rows)
    e_cols = transpose_packed(e_rows, kappa)
    d_cols = b_cols ^ g1_cols ^ e_cols
    b_rows = transpose_packed(b_cols, rows)
    return ReceiverState(params, seed_pairs, b_rows, np.ascontiguousarray(e_rows, dtype=np.uint8), d_cols)


def receiver_phase1(params: Params, seed_pairs: SeedPairs, choices, pad_rng: np.random.Generator | None = None
                    ) -> tuple[ReceiverState, BitMatrix]:
    """Build ``B``, ``E``, ``D`` for one batch; returns the state and the wire matrix ``D``."""
    r = validate_choices(choices, params.n)
    pads = padding_codewords(params.kappa, params.mu, pad_rng)
    e_rows = codeword_rows(params.kappa, np.concatenate([r, pads]))
    state = receiver_phase1_from_rows(params, seed_pairs, e_rows)
    return state, state.D


def sender_phase1(params: Params, s: BitVector, seeds: list[bytes], D: BitMatrix) -> SenderState:
    """Column rule ``a^j = (s_j & d^j) xor G(k^{s_j}_j)``."""
    if D.cols != params.kappa or len(s) != params.kappa or len(seeds) != params.kappa:
        raise ProtocolError(f"D must have {params.kappa} columns")
    rows = D.rows
    g_cols = prg_columns(seeds, rows)
    s_bits = np.fromiter(s, dtype=np.uint8, count=params.kappa)
    a_cols = g_cols ^ (D.column_array * s_bits[:, None])
    return SenderState(params, s, transpose_packed(a_cols, rows))


# ---------------------------------------------------------------------------
# checks


def receiver_check(state: ReceiverState, W: np.ndarray) -> list[CheckTuple]:
    """One ``(alpha, b)`` per combiner row of ``W``."""
    W = np.asarray(W, dtype=np.uint8)
    if W.shape[1] != state.rows:
        raise DimensionError(f"combiners have {W.shape[1]} bits, expected {state.rows}")
    lookup = _lookup(state.params.kappa)
    b_bits = (W.astype(np.int64) @ row_parities(state.b_rows).astype(np.int64)) & 1
    out = []
    for l in range(W.shape[0]):
        combined = xor_reduce_rows(state.e_rows, W[l])
        alpha = lookup.get(int.from_bytes(combined.tobytes(), "little"))
        if alpha is None:
            raise WhotError(f"combined E row {l + 1} is not a codeword; E is malformed")
        out.append(CheckTuple(alpha, int(b_bits[l])))
    return out


def sender_check(state: SenderState, W: np.ndarray, tuples) -> None:
    """Raise :class:`CheckFailed` at the first iteration with ``a != b xor p``."""
    kappa = state.params.kappa
    W = np.asarray(W, dtype=np.uint8)
    if len(tuples) != W.shape[0]:
        raise ProtocolError(f"expected {W.shape[0]} check tuples, got {len(tuples)}")
    code = build_code(kappa)
    a_bits = (W.astype(np.int64) @ row_parities(state.a_rows).astype(np.int64)) & 1
    s_val = state.s.value
    for l, t in enumerate(tuples):
        alpha, b = (t.alpha, t.b) if isinstance(t, CheckTuple) else t
        if not 1 <= alpha <= kappa or b not in (0, 1):
            raise CheckFailed(l + 1, f"check {l + 1}: malformed tuple ({alpha}, {b})")
        p = (s_val & code[alpha].value).bit_count() & 1
        if int(a_bits[l]) != b ^ p:
            raise CheckFailed(l + 1)


# ---------------------------------------------------------------------------
# phase II


def _ro_indices(offset: int, count: int) -> np.ndarray:
    return np.arange(offset + 1, offset + count + 1, dtype=np.uint64)


def sender_pads(state: SenderState, count: int, offset: int = 0) -> np.ndarray:
    """All ``m x n`` pads ``H(i, a_i xor (s & c_j))`` for the first ``count`` rows."""
    p = state.params
    table = _packed_table(p.kappa)[: p.n]
    s_bytes = np.frombuffer(state.s.to_bytes(), dtype=np.uint8)
    masks = table & s_bytes
    out = np.empty((count, p.n, p.value_bytes), dtype=np.uint8)
    for start in range(0, count, PHASE2_CHUNK):
        stop = min(count, start + PHASE2_CHUNK)
        inputs = state.a_rows[start:stop, None, :] ^ masks[None, :, :]
        idx = np.repeat(_ro_indices(offset + start, stop - start), p.n)
        pads = ro_mask_many(idx, inputs.reshape(-1, inputs.shape[-1]), p.ell)
        out[start:stop] = pads.reshape(stop - start, p.n, p.value_bytes)
    return out


def sender_phase2(state: SenderState, inputs: np.ndarray, offset: int = 0) -> np.ndarray:
    """Masked block ``y_{i,j}`` with shape ``(m, n, ceil(ell/8))``."""
    inputs = np.asarray(inputs, dtype=np.uint8)
    count = inputs.shape[0]
    if inputs.shape[1:] != (state.params.n, state.params.value_bytes):
        raise DimensionError(f"inputs shape {inputs.shape} does not match params")
    return inputs ^ sender_pads(state, count, offset)


def receiver_phase2(state: ReceiverState, masked: np.ndarray, choices, offset: int = 0) -> np.ndarray:
    """Recover ``z_i = y_{i,r_i} xor H(i, b_i)``; shape ``(m, ceil(ell/8))``."""
    r = validate_choices(choices, state.params.n)
    count = r.size
    pads = ro_mask_many(_ro_indices(offset, count), state.b_rows[:count], state.params.ell)
    return masked[np.arange(count), r - 1] ^ pads


def pack_masked(masked: np.ndarray, ell: int) -> bytes:
    """Bit-pack ``ell``-bit values row-major (i outer, j inner), LSB-first."""
    flat = masked.reshape(-1, masked.shape[-1])
    bits = unpack_bits(flat, ell, axis=1)
    return pack_bits(bits.reshape(-1)).tobytes()


def unpack_masked(payload: bytes, m: int, n: int, ell: int) -> np.ndarray:
    if len(payload) != nbytes_for(m * n * ell):
        raise ProtocolError(f"MASKED has {len(payload)} bytes, expected {nbytes_for(m * n * ell)}")
    bits = unpack_bits(np.frombuffer(payload, dtype=np.uint8), m * n * ell).reshape(m * n, ell)
    return pack_bits(bits, axis=1).reshape(m, n, nbytes_for(ell))


def values_to_array(values, ell: int) -> np.ndarray:
    """Nested lists of ints -> packed array with a trailing byte axis."""
    arr = np.asarray(values, dtype=object)
    nb = nbytes_for(ell)
    flat = [int(v) for v in arr.reshape(-1)]
    if any(v < 0 or v >> ell for v in flat):
        raise ParameterError(f"values must fit in {ell} bits")
    data = b"".join(v.to_bytes(nb, "little") for v in flat)
    return np.frombuffer(data, dtype=np.uint8).reshape(*arr.shape, nb).copy()


def array_to_values(arr: np.ndarray) -> list:
    """Inverse of :func:`values_to_array`."""
    flat = arr.reshape(-1, arr.shape[-1])
    ints = [int.from_bytes(row.tobytes(), "little") for row in flat]
    return np.array(ints, dtype=object).reshape(arr.shape[:-1]).tolist()


def random_inputs(params: Params, rng: np.random.Generator | None = None) -> np.ndarray:
    nb = params.value_bytes
    data = np.frombuffer(random_bytes(rng, params.m * params.n * nb), dtype=np.uint8).copy()
    data = data.reshape(params.m, params.n, nb)
    if params.ell % 8:
        data[..., -1] &= (1 << (params.ell % 8)) - 1
    return data


# ---------------------------------------------------------------------------
# sessions


class _Timer:
    def __init__(self, stats: TranscriptStats):
        self.stats = stats

    @contextmanager
    def phase(self, name: str):
        start = time.perf_counter()
        try:
            yield
        finally:
            self.stats.time_ms[name] += (time.perf_counter() - start) * 1000.0


def new_stats(params: Params) -> TranscriptStats:
    return TranscriptStats(params=params.as_dict(), mode=params.mode)


def finish_stats(stats: TranscriptStats, channel: Channel, started: float) -> TranscriptStats:
    stats.bytes = {c: int(channel.counts[c]) for c in CATEGORIES}
    stats.messages = dict(channel.messages)
    stats.time_ms["total"] = (time.perf_counter() - started) * 1000.0
    return stats


def _batch_params(params: Params, size: int) -> Params:
    return params.replace(m=size)


def _sender_batch(channel, params, inputs, offset, rng, base_ot, timer):
    with timer.phase("seed_ot"):
        s = random_s(params.kappa, rng)
        seeds = base_ot.receive(channel, s)
    with timer.phase("phase1"):
        rows = inputs.shape[0] + params.mu
        payload = channel.recv(MsgType.MATRIX_D)
        try:
            D = BitMatrix.from_bytes(payload, rows, params.kappa)
        except WhotError as exc:
            raise ProtocolError(f"bad MATRIX_D: {exc}") from exc
        state = sender_phase1(params, s, seeds, D)
    if params.is_active:
        with timer.phase("check"):
            W = coin_toss(channel, "sender", params.kappa, params.mu, rows, rng)
            tuples = unpack_checks(channel.recv(MsgType.CHECKS), params.mu)
            sender_check(state, W, tuples)
    with timer.phase("phase2"):
        masked = sender_phase2(state, inputs, offset)
        channel.send(MsgType.MASKED, pack_masked(masked, params.ell))
    return state


def _receiver_batch(channel, params, choices, offset, rng, base_ot, timer):
    with timer.phase("seed_ot"):
        pairs = random_seed_pairs(params.kappa, rng)
        base_ot.send_pairs(channel, pairs)
    with timer.phase("phase1"):
        state, D = receiver_phase1(params, pairs, choices, rng)
        channel.send(MsgType.MATRIX_D, D.to_bytes())
    if params.is_active:
        with timer.phase("check"):
            W = coin_toss(channel, "receiver", params.kappa, params.mu, state.rows, rng)
            channel.send(MsgType.CHECKS, pack_checks(receiver_check(state, W)))
    with timer.phase("phase2"):
        masked = unpack_masked(channel.recv(MsgType.MASKED), len(choices), params.n, params.ell)
        return receiver_phase2(state, masked, choices, offset)


def run_sender(channel: Channel, params: Params, inputs: np.ndarray, *, rng: np.random.Generator | None = None,
               base_ot: BaseOTProvider | None = None) -> TranscriptStats:
    """Sender side of a full session; raises :class:`SessionAbort` on abort.

    The abort exception carries the partial transcript in ``exc.stats``.
    """
    base_ot = base_ot or IdealDealer()
    inputs = np.asarray(inputs, dtype=np.uint8)
    if inputs.shape != (params.m, params.n, params.value_bytes):
        raise ParameterError(f"inputs shape {inputs.shape} != {(params.m, params.n, params.value_bytes)}")
    stats = new_stats(params)
    timer = _Timer(stats)
    started = time.perf_counter()
    try:
        handshake(channel, params)
        for offset, size in params.batches():
            _sender_batch(channel, params, inputs[offset:offset + size], offset, rng, base_ot, timer)
            stats.batches += 1
    except CheckFailed as exc:
        channel.send_abort(AbortReason.CHECK_FAILED)
        _fail(stats, channel, started, exc)
    except SessionAbort as exc:
        _fail(stats, channel, started, exc)
    except ProtocolError as exc:
        channel.send_abort(AbortReason.PROTOCOL_ERROR)
        _fail(stats, channel, started, exc)
    return finish_stats(stats, channel, started)


def run_receiver(channel: Channel, params: Params, choices, *, rng: np.random.Generator | None = None,
                 base_ot: BaseOTProvider | None = None) -> tuple[np.ndarray, TranscriptStats]:
    """Receiver side of a full session; returns ``(outputs, stats)``."""
    base_ot = base_ot or IdealDealer()
    r = validate_choices(choices, params.n)
    if r.size != params.m:
        raise ParameterError(f"need {params.m} choices, got {r.size}")
    stats = new_stats(params)
    timer = _Timer(stats)
    started = time.perf_counter()
    outputs = np.empty((params.m, params.value_bytes), dtype=np.uint8)
    try:
        handshake(channel, params)
        for offset, size in params.batches():
            outputs[offset:offset + size] = _receiver_batch(channel, params, r[offset:offset + size], offset, rng,
                                                            base_ot, timer)
            stats.batches += 1
    except SessionAbort as exc:
        _fail(stats, channel, started, exc)
    except ProtocolError as exc:
        channel.send_abort(AbortReason.PROTOCOL_ERROR)
        _fail(stats, channel, started, exc)
    return outputs, finish_stats(stats, channel, started)


def _fail(stats, channel, started, exc):
    reason = exc.reason if isinstance(exc, SessionAbort) else AbortReason.PROTOCOL_ERROR
    stats.aborted = True
    stats.abort_reason = reason.name
    finish_stats(stats, channel, started)
    if not isinstance(exc, SessionAbort):
        exc = SessionAbort(reason, str(exc))
    exc.stats = stats
    raise exc


def run_session(channel: Channel, role: str, params: Params, inputs, **kwargs):
    """Dispatch on ``role``; the sender returns ``(None, stats)``."""
    if role == "sender":
        return None, run_sender(channel, params, inputs, **kwargs)
    if role == "receiver":
        return run_receiver(channel, params, inputs, **kwargs)
    raise ParameterError(f"unknown role {role!r}")


@dataclass
class LocalRun:
    outputs: np.ndarray | None
    sender_stats: TranscriptStats
    receiver_stats: TranscriptStats
    sender_error: BaseException | None = None
    receiver_error: BaseException | None = None
    sender_channel: Channel | None = None
    receiver_channel: Channel | None = None

    @property
    def aborted(self) -> bool:
        return self.sender_error is not None or self.receiver_error is not None


def run_local(params: Params, inputs: np.ndarray, choices, *, sender_rng=None, receiver_rng=None,
              record: bool = False, receiver_params: Params | None = None) -> LocalRun:
    """Run both parties in-process over a socket pair (sender on a worker thread)."""
    import threading

    from .wire import channel_pair

    s_chan, r_chan = channel_pair(record=record)
    box: dict = {}

    def sender():
        try:
            box["stats"] = run_sender(s_chan, params, inputs, rng=sender_rng)
        except BaseException as exc:  # surfaced to the caller below
            box["error"] = exc
            box["stats"] = getattr(exc, "stats", None)

    worker = threading.Thread(target=sender, name="whot-sender", daemon=True)
    worker.start()
    outputs = None
    r_error = None
    try:
        outputs, r_stats = run_receiver(r_chan, receiver_params or params, choices, rng=receiver_rng)
    except BaseException as exc:
        r_error = exc
        r_stats = getattr(exc, "stats", None)
    worker.join()
    s_chan.close()
    r_chan.close()
    return LocalRun(outputs, box.get("stats"), r_stats, box.get("error"), r_error, s_chan, r_chan)
