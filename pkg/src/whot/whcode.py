"""Walsh-Hadamard codes, index-set differences, pruning and pruned decoding.

Conventions (fixed for wire interop):

* position ``p`` (0-based) of ``WH(x)`` is the inner product of ``x`` with
  the ``log2(kappa)``-bit binary expansion of ``p``;
* codeword ``c_j`` (1-based ``j``) is ``WH(binary(j - 1))``, so ``c_1`` is
  the all-zero word and ``c_{j} xor c_{k} = c_{((j-1) xor (k-1)) + 1}``.

Index sets are 1-based, sorted tuples of positions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .bitops import BitVector, nbytes_for
from .errors import AmbiguityError, DimensionError, ParameterError

IndexSet = tuple[int, ...]


def is_power_of_two(k: int) -> bool:
    return k >= 1 and k & (k - 1) == 0


def _log2(kappa: int) -> int:
    if not is_power_of_two(kappa) or kappa < 2:
        raise ParameterError(f"kappa must be a power of two >= 2, got {kappa}")
    return kappa.bit_length() - 1


def _codeword_value(message: int, kappa: int) -> int:
    value = 0
    for pos in range(kappa):
        if (message & pos).bit_count() & 1:
            value |= 1 << pos
    return value


def wh_encode(x: BitVector | str, kappa: int) -> BitVector:
    """Encode a ``log2(kappa)``-bit message.

    The message is read most-significant bit first, matching the binary
    expansion of the position index, e.g. ``wh_encode("10", 4) == "0011"``.
    """
    if isinstance(x, str):
        x = BitVector.from_str(x)
    k = _log2(kappa)
    if len(x) != k:
        raise ParameterError(f"message must have {k} bits, got {len(x)}")
    message = 0
    for bit in x:
        message = (message << 1) | bit
    return BitVector(kappa, _codeword_value(message, kappa))


def message_bits(index: int, kappa: int) -> BitVector:
    """Binary expansion (MSB first) of ``index - 1``, the message behind ``c_index``."""
    k = _log2(kappa)
    return BitVector.from_str(format(index - 1, f"0{k}b"))


def normalize_index_set(indices: Iterable[int], length: int | None = None) -> IndexSet:
    out = tuple(sorted(set(int(i) for i in indices)))
    if out and out[0] < 1:
        raise ParameterError(f"index set positions are 1-based, got {out[0]}")
    if length is not None and out and out[-1] > length:
        raise ParameterError(f"index {out[-1]} exceeds length {length}")
    return out


def hdi(u: BitVector, v: BitVector) -> IndexSet:
    """1-based positions where ``u`` and ``v`` differ."""
    if len(u) != len(v):
        raise DimensionError(f"length mismatch: {len(u)} vs {len(v)}")
    diff = u.value ^ v.value
    out = []
    while diff:
        low = diff & -diff
        out.append(low.bit_length())
        diff ^= low
    return tuple(out)


def prune(v: BitVector, indices: Iterable[int]) -> BitVector:
    """Delete the 1-based positions in ``indices`` from ``v``, keeping order."""
    drop = normalize_index_set(indices, len(v))
    if not drop:
        return v
    keep_mask = ((1 << len(v)) - 1)
    for i in drop:
        keep_mask &= ~(1 << (i - 1))
    value = 0
    out_pos = 0
    src = v.value
    for pos in range(len(v)):
        if keep_mask >> pos & 1:
            if src >> pos & 1:
                value |= 1 << out_pos
            out_pos += 1
    return BitVector(len(v) - len(drop), value)


@dataclass(frozen=True)
class WHCode:
    """The code ``c_1 .. c_kappa`` of length ``kappa``."""

    kappa: int
    codewords: tuple[BitVector, ...] = field(repr=False)

    def __post_init__(self):
        _log2(self.kappa)
        if len(self.codewords) != self.kappa:
            raise ParameterError("a WH code has exactly kappa codewords")

    def __len__(self) -> int:
        return self.kappa

    def __getitem__(self, index: int) -> BitVector:
        """Codeword ``c_index`` (1-based)."""
        if not 1 <= index <= self.kappa:
            raise ParameterError(f"codeword index {index} outside [1, {self.kappa}]")
        return self.codewords[index - 1]

    @property
    def min_distance(self) -> int:
        return self.kappa // 2

    def index_of(self, v: BitVector) -> Optional[int]:
        return is_codeword(v, self)

    def packed(self) -> np.ndarray:
        """All codewords as packed rows, shape ``(kappa, kappa/8)``; needs kappa >= 8."""
        return _packed_table(self.kappa)


_CODE_CACHE: dict[int, WHCode] = {}
_PACKED_CACHE: dict[int, np.ndarray] = {}
_LOOKUP_CACHE: dict[int, dict[int, int]] = {}


def build_code(kappa: int) -> WHCode:
    code = _CODE_CACHE.get(kappa)
    if code is None:
        _log2(kappa)
        words = tuple(BitVector(kappa, _codeword_value(j, kappa)) for j in range(kappa))
        code = WHCode(kappa, words)
        _CODE_CACHE[kappa] = code
    return code


def _packed_table(kappa: int) -> np.ndarray:
    table = _PACKED_CACHE.get(kappa)
    if table is None:
        code = build_code(kappa)
        table = np.array([np.frombuffer(c.to_bytes(), dtype=np.uint8) for c in code.codewords], dtype=np.uint8)
        table = table.reshape(kappa, nbytes_for(kappa))
        table.flags.writeable = False
        _PACKED_CACHE[kappa] = table
    return table


def _lookup(kappa: int) -> dict[int, int]:
    table = _LOOKUP_CACHE.get(kappa)
    if table is None:
        table = {c.value: j for j, c in enumerate(build_code(kappa).codewords, start=1)}
        _LOOKUP_CACHE[kappa] = table
    return table


def is_codeword(v: BitVector, code: WHCode) -> Optional[int]:
    """1-based index ``j`` with ``v == c_j``, or ``None``."""
    if len(v) != code.kappa:
        raise DimensionError(f"vector length {len(v)} != kappa {code.kappa}")
    return _lookup(code.kappa).get(v.value)


def nearest_codeword(v: BitVector, code: WHCode) -> int:
    """Index of a closest codeword (lowest index on ties)."""
    if len(v) != code.kappa:
        raise DimensionError(f"vector length {len(v)} != kappa {code.kappa}")
    best, best_d = 1, code.kappa + 1
    for j, c in enumerate(code.codewords, start=1):
        d = (c.value ^ v.value).bit_count()
        if d < best_d:
            best, best_d = j, d
    return best


@dataclass(frozen=True)
class PrunedCode:
    """``code`` with the positions in ``pruned_at`` removed from every codeword."""

    base: WHCode
    pruned_at: IndexSet
    pruned_codewords: tuple[BitVector, ...] = field(repr=False)

    @property
    def length(self) -> int:
        return self.base.kappa - len(self.pruned_at)

    @property
    def distance_bound(self) -> int:
        return self.base.kappa // 2 - len(self.pruned_at)


def prune_code(code: WHCode, indices: Iterable[int]) -> PrunedCode:
    pruned_at = normalize_index_set(indices, code.kappa)
    return PrunedCode(code, pruned_at, tuple(prune(c, pruned_at) for c in code.codewords))


def decode_pruned(v: BitVector, pc: PrunedCode) -> Optional[int]:
    """Index ``r`` with ``prune(c_r, T) == v`` (exact match), else ``None``."""
    if len(pc.pruned_at) >= pc.base.kappa // 2:
        raise AmbiguityError(f"|T| = {len(pc.pruned_at)} >= kappa/2 = {pc.base.kappa // 2}")
    if len(v) != pc.length:
        raise DimensionError(f"vector length {len(v)} != pruned length {pc.length}")
    for r, c in enumerate(pc.pruned_codewords, start=1):
        if c == v:
            return r
    return None


def linearity_test(strings: Sequence[BitVector], code: WHCode, rng: np.random.Generator) -> bool:
    """Randomized many-string linearity test; ``True`` means accept.

    Combines the strings with uniformly random bits and accepts iff the
    combination is a codeword.  Rejects with probability >= 1/2 when any
    input is not a codeword.
    """
    combiner = rng.integers(0, 2, size=len(strings))
    acc = 0
    for bit, s in zip(combiner, strings):
        if len(s) != code.kappa:
            raise DimensionError(f"string length {len(s)} != kappa {code.kappa}")
        if bit:
            acc ^= s.value
    return is_codeword(BitVector(code.kappa, acc), code) is not None
