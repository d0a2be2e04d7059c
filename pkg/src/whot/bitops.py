"""Packed bit vectors and bit matrices over GF(2).

Bit order is LSB-first inside each byte: bit ``k`` of a vector lives in byte
``k // 8`` at position ``k % 8``.  Indices are 0-based in code; the 1-based
positions used by index sets are converted at the call site.

:class:`BitVector` is a small immutable value backed by a Python int, which
keeps per-vector work (codewords, check combinations, single rows) cheap.
:class:`BitMatrix` stores packed columns in a numpy array and is the shape the
protocol matrices travel in.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionError, ParameterError


def nbytes_for(bits: int) -> int:
    return (bits + 7) // 8


class BitVector:
    """Immutable fixed-length bit string."""

    __slots__ = ("_value", "_length")

    def __init__(self, length: int, value: int = 0):
        if length < 0:
            raise ParameterError("length must be non-negative")
        if value < 0 or value >> length:
            raise ParameterError(f"value does not fit in {length} bits")
        self._length = length
        self._value = value

    @classmethod
    def zeros(cls, length: int) -> BitVector:
        return cls(length, 0)

    @classmethod
    def ones(cls, length: int) -> BitVector:
        return cls(length, (1 << length) - 1)

    @classmethod
    def unit(cls, length: int, index: int) -> BitVector:
        """Vector with a single one at 0-based ``index``."""
        if not 0 <= index < length:
            raise ParameterError(f"index {index} out of range for length {length}")
        return cls(length, 1 << index)

    @classmethod
    def from_bits(cls, bits: Iterable[int]) -> BitVector:
        value = 0
        n = 0
        for n, b in enumerate(bits, start=1):
            if b not in (0, 1, True, False):
                raise ParameterError(f"not a bit: {b!r}")
            if b:
                value |= 1 << (n - 1)
        return cls(n, value)

    @classmethod
    def from_str(cls, text: str) -> BitVector:
        """Parse ``"1011"``; the first character is position 0."""
        text = text.replace("_", "").replace(" ", "")
        if any(ch not in "01" for ch in text):
            raise ParameterError(f"not a bit string: {text!r}")
        return cls.from_bits(int(ch) for ch in text)

    @classmethod
    def from_bytes(cls, data: bytes, length: int) -> BitVector:
        if len(data) != nbytes_for(length):
            raise DimensionError(f"expected {nbytes_for(length)} bytes for {length} bits, got {len(data)}")
        value = int.from_bytes(data, "little")
        if value >> length:
            raise ParameterError("padding bits are not zero")
        return cls(length, value)

    @property
    def value(self) -> int:
        """The bits as an integer, position 0 in the least significant bit."""
        return self._value

    def __len__(self) -> int:
        return self._length

    def __getitem__(self, index: int) -> int:
        if index < 0:
            index += self._length
        if not 0 <= index < self._length:
            raise IndexError(index)
        return (self._value >> index) & 1

    def __iter__(self):
        v = self._value
        for _ in range(self._length):
            yield v & 1
            v >>= 1

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BitVector):
            return NotImplemented
        return self._length == other._length and self._value == other._value

    def __hash__(self) -> int:
        return hash((self._length, self._value))

    def __xor__(self, other: BitVector) -> BitVector:
        return xor_vec(self, other)

    def __and__(self, other: BitVector) -> BitVector:
        return and_vec(self, other)

    def __str__(self) -> str:
        return "".join("1" if b else "0" for b in self)

    def __repr__(self) -> str:
        return f"BitVector('{self}')"

    def with_bit(self, index: int, bit: int) -> BitVector:
        """Copy with position ``index`` set to ``bit``."""
        if not 0 <= index < self._length:
            raise IndexError(index)
        mask = 1 << index
        return BitVector(self._length, (self._value | mask) if bit else (self._value & ~mask))

    def flip(self, index: int) -> BitVector:
        if not 0 <= index < self._length:
            raise IndexError(index)
        return BitVector(self._length, self._value ^ (1 << index))

    def weight(self) -> int:
        return self._value.bit_count()

    def to_bytes(self) -> bytes:
        return self._value.to_bytes(nbytes_for(self._length), "little")

    def to_array(self) -> np.ndarray:
        """Packed uint8 array (same layout as :meth:`to_bytes`)."""
        return np.frombuffer(self.to_bytes(), dtype=np.uint8).copy()

    def hex(self) -> str:
        return self.to_bytes().hex()


def _check_same_length(a: BitVector, b: BitVector) -> None:
    if len(a) != len(b):
        raise DimensionError(f"length mismatch: {len(a)} vs {len(b)}")


def xor_vec(a: BitVector, b: BitVector) -> BitVector:
    _check_same_length(a, b)
    return BitVector(len(a), a.value ^ b.value)


def and_vec(a: BitVector, b: BitVector) -> BitVector:
    _check_same_length(a, b)
    return BitVector(len(a), a.value & b.value)


def scalar_and(c: int, a: BitVector) -> BitVector:
    return BitVector(len(a), a.value if c else 0)


def parity(a: BitVector) -> int:
    return a.value.bit_count() & 1


def inner_product(a: BitVector, b: BitVector) -> int:
    _check_same_length(a, b)
    return (a.value & b.value).bit_count() & 1


# ---------------------------------------------------------------------------
# numpy kernels on packed arrays; the protocol engine works at this level.


def pack_bits(bits: np.ndarray, axis: int = -1) -> np.ndarray:
    return np.packbits(np.asarray(bits, dtype=np.uint8), axis=axis, bitorder="little")


def unpack_bits(packed: np.ndarray, count: int, axis: int = -1) -> np.ndarray:
    return np.unpackbits(packed, axis=axis, count=count, bitorder="little")


def transpose_packed(packed: np.ndarray, inner_bits: int) -> np.ndarray:
    """Transpose a packed bit matrix.

    ``packed`` has shape ``(outer, ceil(inner_bits/8))``; the result has shape
    ``(inner_bits, ceil(outer/8))``.
    """
    bits = np.unpackbits(packed, axis=1, count=inner_bits, bitorder="little")
    return np.packbits(np.ascontiguousarray(bits.T), axis=1, bitorder="little")


def xor_reduce_rows(rows: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """XOR of the packed ``rows`` selected by boolean ``mask``."""
    selected = rows[np.asarray(mask, dtype=bool)]
    if selected.shape[0] == 0:
        return np.zeros(rows.shape[1], dtype=np.uint8)
    return np.bitwise_xor.reduce(selected, axis=0)


def row_parities(rows: np.ndarray) -> np.ndarray:
    """Parity of every packed row, as a uint8 array of 0/1."""
    return (np.bitwise_count(rows).sum(axis=1, dtype=np.int64) & 1).astype(np.uint8)


class BitMatrix:
    """Binary matrix with column-major packed storage.

    ``storage[j]`` holds column ``j`` as ``ceil(rows/8)`` bytes, LSB-first and
    zero padded, which is also the wire layout.
    """

    __slots__ = ("rows", "cols", "_storage")

    def __init__(self, rows: int, cols: int, storage: np.ndarray | None = None):
        if rows < 0 or cols < 0:
            raise ParameterError("matrix dimensions must be non-negative")
        self.rows = rows
        self.cols = cols
        shape = (cols, nbytes_for(rows))
        if storage is None:
            storage = np.zeros(shape, dtype=np.uint8)
        else:
            storage = np.ascontiguousarray(storage, dtype=np.uint8)
            if storage.shape != shape:
                raise DimensionError(f"storage shape {storage.shape} != {shape}")
            if rows % 8 and storage.size and np.any(storage[:, -1] >> (rows % 8)):
                raise ParameterError("padding bits are not zero")
        self._storage = storage

    @classmethod
    def zeros(cls, rows: int, cols: int) -> BitMatrix:
        return cls(rows, cols)

    @classmethod
    def identity(cls, size: int) -> BitMatrix:
        return cls.from_rows([BitVector.unit(size, i) for i in range(size)])

    @classmethod
    def from_rows(cls, rows: Sequence[BitVector]) -> BitMatrix:
        if not rows:
            raise DimensionError("need at least one row")
        cols = len(rows[0])
        if any(len(r) != cols for r in rows):
            raise DimensionError("rows have different lengths")
        packed = np.array([np.frombuffer(r.to_bytes(), dtype=np.uint8) for r in rows], dtype=np.uint8)
        packed = packed.reshape(len(rows), nbytes_for(cols))
        return cls.from_row_array(packed, len(rows), cols)

    @classmethod
    def from_columns(cls, columns: Sequence[BitVector]) -> BitMatrix:
        if not columns:
            raise DimensionError("need at least one column")
        rows = len(columns[0])
        if any(len(c) != rows for c in columns):
            raise DimensionError("columns have different lengths")
        storage = np.array([np.frombuffer(c.to_bytes(), dtype=np.uint8) for c in columns], dtype=np.uint8)
        return cls(rows, len(columns), storage.reshape(len(columns), nbytes_for(rows)))

    @classmethod
    def from_row_array(cls, packed_rows: np.ndarray, rows: int, cols: int) -> BitMatrix:
        """Build from row-major packed data of shape ``(rows, ceil(cols/8))``."""
        packed_rows = np.asarray(packed_rows, dtype=np.uint8)
        if packed_rows.shape != (rows, nbytes_for(cols)):
            raise DimensionError(f"row array shape {packed_rows.shape} != {(rows, nbytes_for(cols))}")
        return cls(rows, cols, transpose_packed(packed_rows, cols))

    @classmethod
    def from_bytes(cls, data: bytes, rows: int, cols: int) -> BitMatrix:
        expected = cols * nbytes_for(rows)
        if len(data) != expected:
            raise DimensionError(f"expected {expected} bytes, got {len(data)}")
        return cls(rows, cols, np.frombuffer(data, dtype=np.uint8).reshape(cols, nbytes_for(rows)))

    @property
    def column_array(self) -> np.ndarray:
        """Read-only view of the packed columns."""
        view = self._storage.view()
        view.flags.writeable = False
        return view

    def row_array(self) -> np.ndarray:
        """Row-major packed copy, shape ``(rows, ceil(cols/8))``."""
        return transpose_packed(self._storage, self.rows)

    def to_bytes(self) -> bytes:
        return self._storage.tobytes()

    def get_col(self, j: int) -> BitVector:
        if not 0 <= j < self.cols:
            raise IndexError(j)
        return BitVector.from_bytes(self._storage[j].tobytes(), self.rows)

    def get_row(self, i: int) -> BitVector:
        if not 0 <= i < self.rows:
            raise IndexError(i)
        byte, bit = divmod(i, 8)
        bits = (self._storage[:, byte] >> bit) & 1
        return BitVector.from_bytes(pack_bits(bits).tobytes(), self.cols)

    def get(self, i: int, j: int) -> int:
        if not (0 <= i < self.rows and 0 <= j < self.cols):
            raise IndexError((i, j))
        return int(self._storage[j, i // 8] >> (i % 8)) & 1

    def set_col(self, j: int, column: BitVector) -> None:
        if not 0 <= j < self.cols:
            raise IndexError(j)
        if len(column) != self.rows:
            raise DimensionError(f"column length {len(column)} != {self.rows}")
        self._storage[j] = np.frombuffer(column.to_bytes(), dtype=np.uint8)

    def set_row(self, i: int, row: BitVector) -> None:
        if not 0 <= i < self.rows:
            raise IndexError(i)
        if len(row) != self.cols:
            raise DimensionError(f"row length {len(row)} != {self.cols}")
        byte, bit = divmod(i, 8)
        bits = unpack_bits(row.to_array(), self.cols).astype(np.uint8)
        column_bytes = self._storage[:, byte]
        self._storage[:, byte] = (column_bytes & np.uint8(~(1 << bit) & 0xFF)) | (bits << bit)

    def rows_list(self) -> list[BitVector]:
        packed = self.row_array()
        return [BitVector.from_bytes(packed[i].tobytes(), self.cols) for i in range(self.rows)]

    def copy(self) -> BitMatrix:
        return BitMatrix(self.rows, self.cols, self._storage.copy())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BitMatrix):
            return NotImplemented
        return self.rows == other.rows and self.cols == other.cols and np.array_equal(self._storage, other._storage)

    def __xor__(self, other: BitMatrix) -> BitMatrix:
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise DimensionError("matrix shapes differ")
        return BitMatrix(self.rows, self.cols, self._storage ^ other._storage)

    def __repr__(self) -> str:
        return f"BitMatrix({self.rows}x{self.cols})"


def combine_rows(matrix: BitMatrix, w: BitVector) -> BitVector:
    """XOR of the rows of ``matrix`` selected by the ones of ``w``."""
    if len(w) != matrix.rows:
        raise DimensionError(f"combiner length {len(w)} != {matrix.rows} rows")
    mask = unpack_bits(w.to_array(), matrix.rows).astype(bool)
    combined = xor_reduce_rows(matrix.row_array(), mask)
    return BitVector.from_bytes(combined.tobytes(), matrix.cols)


def transpose(matrix: BitMatrix) -> BitMatrix:
    return BitMatrix(matrix.cols, matrix.rows, matrix.row_array())
