import numpy as np
import pytest

from whot.bitops import (
    BitMatrix,
    BitVector,
    and_vec,
    combine_rows,
    inner_product,
    parity,
    row_parities,
    scalar_and,
    transpose,
    transpose_packed,
    xor_reduce_rows,
    xor_vec,
)
from whot.errors import DimensionError, ParameterError

V = BitVector.from_str


@pytest.mark.parametrize("a,b,out", [("1010", "0000", "1010"), ("1010", "1010", "0000"), ("1100", "1010", "0110")])
def test_xor_vec(a, b, out):
    assert xor_vec(V(a), V(b)) == V(out)
    assert V(a) ^ V(b) == V(out)


@pytest.mark.parametrize("a,b,out", [("1111", "1010", "1010"), ("0000", "1010", "0000"), ("1100", "1010", "1000")])
def test_and_vec(a, b, out):
    assert and_vec(V(a), V(b)) == V(out)


def test_length_mismatch_rejected():
    with pytest.raises(DimensionError):
        xor_vec(V("101"), V("10"))
    with pytest.raises(DimensionError):
        and_vec(V("1"), V("10"))


@pytest.mark.parametrize("c,a,out", [(0, "1011", "0000"), (1, "1011", "1011"), (1, "0000", "0000")])
def test_scalar_and(c, a, out):
    assert scalar_and(c, V(a)) == V(out)


@pytest.mark.parametrize("a,b,out", [("11", "11", 0), ("10", "11", 1), ("00", "01", 0), ("00", "11", 0)])
def test_inner_product(a, b, out):
    assert inner_product(V(a), V(b)) == out


@pytest.mark.parametrize("a,out", [("0000", 0), ("0001", 1), ("1101", 1)])
def test_parity(a, out):
    assert parity(V(a)) == out


def test_bitvector_layout():
    v = V("1000_0000_1")
    assert len(v) == 9
    assert v[0] == 1 and v[8] == 1 and v[1] == 0
    assert v.to_bytes() == b"\x01\x01"
    assert BitVector.from_bytes(b"\x01\x01", 9) == v
    with pytest.raises(ParameterError):
        BitVector.from_bytes(b"\x01\x03", 9)  # padding bit set
    assert str(v) == "100000001"
    assert v.weight() == 2
    assert v.flip(0) == V("000000001")


def test_bitvector_rejects_overflow():
    with pytest.raises(ParameterError):
        BitVector(3, 8)


def test_combine_rows_examples():
    M = BitMatrix.from_rows([V("10"), V("01")])
    assert combine_rows(M, V("11")) == V("11")
    assert combine_rows(M, V("00")) == V("00")
    assert combine_rows(M, V("01")) == V("01")


def test_combine_rows_selects_row(rng):
    rows = [BitVector.from_bits(rng.integers(0, 2, 37)) for _ in range(11)]
    M = BitMatrix.from_rows(rows)
    for k in range(11):
        assert combine_rows(M, BitVector.unit(11, k)) == rows[k]


def test_transpose_identity_and_shapes(rng):
    assert transpose(BitMatrix.identity(13)) == BitMatrix.identity(13)
    row = BitMatrix.from_rows([V("10110")])
    col = transpose(row)
    assert (col.rows, col.cols) == (5, 1)
    assert col.get_col(0) == V("10110")


def test_transpose_involution(rng):
    bits = rng.integers(0, 2, (64, 256))
    M = BitMatrix.from_rows([BitVector.from_bits(r) for r in bits])
    assert transpose(transpose(M)) == M
    T = transpose(M)
    assert all(T.get(j, i) == bits[i, j] for i in range(0, 64, 7) for j in range(0, 256, 13))


def test_row_column_accessors_agree(rng):
    bits = rng.integers(0, 2, (19, 23))
    M = BitMatrix.from_rows([BitVector.from_bits(r) for r in bits])
    for i in range(19):
        for j in range(23):
            assert M.get_row(i)[j] == M.get_col(j)[i] == bits[i, j]


def test_set_row_and_col():
    M = BitMatrix.zeros(10, 12)
    M.set_row(9, BitVector.ones(12))
    M.set_col(3, BitVector.ones(10))
    assert M.get_row(9) == BitVector.ones(12)
    assert M.get_row(0) == BitVector.unit(12, 3)
    with pytest.raises(DimensionError):
        M.set_row(0, BitVector.ones(5))


def test_storage_padding_must_be_zero():
    storage = np.zeros((2, 1), dtype=np.uint8)
    storage[0, 0] = 0x80
    with pytest.raises(ParameterError):
        BitMatrix(3, 2, storage)


def test_bytes_round_trip(rng):
    bits = rng.integers(0, 2, (21, 16))
    M = BitMatrix.from_rows([BitVector.from_bits(r) for r in bits])
    assert BitMatrix.from_bytes(M.to_bytes(), 21, 16) == M
    assert len(M.to_bytes()) == 16 * 3


def test_packed_kernels(rng):
    bits = rng.integers(0, 2, (40, 24)).astype(np.uint8)
    packed = np.packbits(bits, axis=1, bitorder="little")
    t = transpose_packed(packed, 24)
    assert np.array_equal(np.unpackbits(t, axis=1, count=40, bitorder="little"), bits.T)
    mask = rng.integers(0, 2, 40).astype(bool)
    expect = np.bitwise_xor.reduce(bits[mask], axis=0)
    got = np.unpackbits(xor_reduce_rows(packed, mask), count=24, bitorder="little")
    assert np.array_equal(got, expect)
    assert np.array_equal(row_parities(packed), bits.sum(axis=1) % 2)
