"""Random oracle, PRG and coin tossing.

* ``H(i, row)`` = SHA-256(LE64(i) || packed row), truncated to ``ell`` bits.
* ``G(seed)`` = AES-128-CTR keystream; key is seed bytes 0..15, the initial
  counter block is seed bytes 16..31 (seeds shorter than 256 bits are zero
  padded first).
* The coin toss exchanges one ``kappa``-bit share each way and expands
  SHA-256(s_S || s_R), cut to ``kappa`` bits, with ``G``.
"""

from __future__ import annotations

import hashlib
import os
import struct

import numpy as np
from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes

from .bitops import BitVector, nbytes_for, pack_bits, unpack_bits
from .errors import ParameterError, ProtocolError
from .wire import Channel, MsgType

_LE64 = struct.Struct("<Q")
_SEED_BYTES = 32


def random_bytes(rng: np.random.Generator | None, n: int) -> bytes:
    """``n`` bytes from ``rng`` when given (tests), else from the OS."""
    return rng.bytes(n) if rng is not None else os.urandom(n)


def _mask_top(data: bytearray | bytes, bits: int) -> bytes:
    rem = bits % 8
    if rem and data:
        data = bytearray(data)
        data[-1] &= (1 << rem) - 1
    return bytes(data)


def ro_mask(index: int, row: BitVector, ell: int) -> BitVector:
    if ell < 1 or ell > 256:
        raise ParameterError(f"ell must be in [1, 256], got {ell}")
    digest = hashlib.sha256(_LE64.pack(index) + row.to_bytes()).digest()
    return BitVector.from_bytes(_mask_top(digest[: nbytes_for(ell)], ell), ell)


def ro_mask_many(indices: np.ndarray, rows: np.ndarray, ell: int) -> np.ndarray:
    """Vectorised :func:`ro_mask`.

    ``indices`` has shape ``(N,)``; ``rows`` has shape ``(N, kappa/8)`` packed.
    Returns ``(N, ceil(ell/8))`` uint8 pads with the bits above ``ell`` zero.
    """
    if ell < 1 or ell > 256:
        raise ParameterError(f"ell must be in [1, 256], got {ell}")
    count, row_bytes = rows.shape
    out_bytes = nbytes_for(ell)
    buf = np.empty((count, 8 + row_bytes), dtype=np.uint8)
    buf[:, :8] = np.asarray(indices, dtype="<u8").reshape(count, 1).view(np.uint8)
    buf[:, 8:] = rows
    width = 8 + row_bytes
    raw = buf.tobytes()
    sha = hashlib.sha256
    out = b"".join([sha(raw[o : o + width]).digest()[:out_bytes] for o in range(0, count * width, width)])
    pads = np.frombuffer(out, dtype=np.uint8).reshape(count, out_bytes).copy()
    if ell % 8:
        pads[:, -1] &= (1 << (ell % 8)) - 1
    return pads


def _seed_bytes(seed: bytes) -> bytes:
    if len(seed) > _SEED_BYTES:
        raise ParameterError(f"seed longer than {_SEED_BYTES * 8} bits")
    return seed.ljust(_SEED_BYTES, b"\x00")


def prg_bytes(seed: bytes, out_bits: int) -> bytes:
    """``G(seed)`` truncated to ``out_bits`` bits, packed LSB-first."""
    if out_bits < 1:
        raise ParameterError("out_bits must be >= 1")
    full = _seed_bytes(seed)
    encryptor = Cipher(algorithms.AES(full[:16]), modes.CTR(full[16:])).encryptor()
    stream = encryptor.update(bytes(nbytes_for(out_bits))) + encryptor.finalize()
    return _mask_top(stream, out_bits)


def prg_expand(seed: BitVector | bytes, out_bits: int) -> BitVector:
    raw = seed.to_bytes() if isinstance(seed, BitVector) else bytes(seed)
    return BitVector.from_bytes(prg_bytes(raw, out_bits), out_bits)


def prg_columns(seeds: list[bytes], out_bits: int) -> np.ndarray:
    """Expand every seed; returns packed columns of shape ``(len(seeds), ceil(out_bits/8))``."""
    width = nbytes_for(out_bits)
    out = np.empty((len(seeds), width), dtype=np.uint8)
    for j, seed in enumerate(seeds):
        out[j] = np.frombuffer(prg_bytes(seed, out_bits), dtype=np.uint8)
    return out


def derive_combiners(sender_share: bytes, receiver_share: bytes, kappa: int, mu: int, rows: int) -> np.ndarray:
    """Deterministic coin-toss output as a ``(mu, rows)`` 0/1 array."""
    master = hashlib.sha256(sender_share + receiver_share).digest()[: nbytes_for(kappa)]
    master = _mask_top(master, kappa)
    stream = np.frombuffer(prg_bytes(master, mu * rows), dtype=np.uint8)
    bits = unpack_bits(stream, mu * rows)
    return bits.reshape(mu, rows)


def combiners_as_vectors(w: np.ndarray) -> list[BitVector]:
    rows = w.shape[1]
    return [BitVector.from_bytes(pack_bits(w[l]).tobytes(), rows) for l in range(w.shape[0])]


def coin_toss(
    channel: Channel,
    role: str,
    kappa: int,
    mu: int,
    rows: int,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Agree on ``mu`` random combiners of ``rows`` bits each.

    The receiver speaks first.  ``rows`` is ``m + mu`` for the batch.
    """
    share_len = nbytes_for(kappa)
    local = _mask_top(random_bytes(rng, share_len), kappa)
    if role == "receiver":
        channel.send(MsgType.COIN_R, local)
        remote = channel.recv(MsgType.COIN_S)
        sender_share, receiver_share = remote, local
    elif role == "sender":
        remote = channel.recv(MsgType.COIN_R)
        channel.send(MsgType.COIN_S, local)
        sender_share, receiver_share = local, remote
    else:
        raise ParameterError(f"unknown role {role!r}")
    if len(remote) != share_len:
        raise ProtocolError(f"coin share has {len(remote)} bytes, expected {share_len}")
    return derive_combiners(sender_share, receiver_share, kappa, mu, rows)
