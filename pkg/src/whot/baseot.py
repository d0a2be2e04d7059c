"""Seed OT providers.

The extension needs ``kappa`` 1-out-of-2 OTs on ``kappa``-bit seeds with the
roles reversed: the extension receiver holds the seed pairs, the extension
sender holds the choice vector ``s``.

Only :class:`IdealDealer` ships here.  It is a TEST-MODE stand-in: the pair
holder transmits *both* seeds of every pair and the chooser selects locally,
so it offers no security at all.  Its traffic is counted in the ``base_ot``
bucket and never mixed with extension traffic.
"""

from __future__ import annotations

import abc
from dataclasses import dataclass

from .bitops import BitVector, nbytes_for
from .errors import DimensionError, ProtocolError
from .wire import Channel, MsgType


@dataclass(frozen=True)
class SeedPairs:
    kappa: int
    pairs: tuple[tuple[bytes, bytes], ...]

    def __post_init__(self):
        width = nbytes_for(self.kappa)
        if len(self.pairs) != self.kappa:
            raise DimensionError(f"need {self.kappa} seed pairs, got {len(self.pairs)}")
        for k0, k1 in self.pairs:
            if len(k0) != width or len(k1) != width:
                raise DimensionError(f"seeds must be {width} bytes")

    def select(self, s: BitVector) -> list[bytes]:
        return [pair[bit] for pair, bit in zip(self.pairs, s)]


class BaseOTProvider(abc.ABC):
    """Contract for seed-OT plugins.

    ``send_pairs`` runs on the extension receiver, ``receive_selected`` on the
    extension sender.  A provider must deliver ``output[j] == pairs[j][s_j]``
    and reveal nothing else across the boundary; the selected seeds are
    validated by :meth:`receive` before the engine touches them.
    """

    @abc.abstractmethod
    def send_pairs(self, channel: Channel, pairs: SeedPairs) -> None: ...

    @abc.abstractmethod
    def receive_selected(self, channel: Channel, s: BitVector) -> list[bytes]: ...

    def receive(self, channel: Channel, s: BitVector) -> list[bytes]:
        seeds = self.receive_selected(channel, s)
        kappa = len(s)
        width = nbytes_for(kappa)
        if len(seeds) != kappa:
            raise ProtocolError(f"base OT returned {len(seeds)} seeds, expected {kappa}")
        for seed in seeds:
            if not isinstance(seed, (bytes, bytearray)) or len(seed) != width:
                raise ProtocolError(f"base OT returned a seed of wrong length (expected {width} bytes)")
        return [bytes(seed) for seed in seeds]


class IdealDealer(BaseOTProvider):
    """Insecure test-mode provider: both seeds cross the wire."""

    def send_pairs(self, channel: Channel, pairs: SeedPairs) -> None:
        channel.send(MsgType.SEEDPAIRS, b"".join(k0 + k1 for k0, k1 in pairs.pairs))
        channel.recv(MsgType.SEEDPAIRS_ACK)

    def receive_selected(self, channel: Channel, s: BitVector) -> list[bytes]:
        kappa = len(s)
        width = nbytes_for(kappa)
        payload = channel.recv(MsgType.SEEDPAIRS)
        if len(payload) != 2 * kappa * width:
            raise ProtocolError(f"SEEDPAIRS has {len(payload)} bytes, expected {2 * kappa * width}")
        pairs = [
            (payload[2 * j * width : (2 * j + 1) * width], payload[(2 * j + 1) * width : (2 * j + 2) * width])
            for j in range(kappa)
        ]
        channel.send(MsgType.SEEDPAIRS_ACK)
        return SeedPairs(kappa, tuple(pairs)).select(s)


def ideal_base_ot(channel: Channel, role: str, value, provider: BaseOTProvider | None = None):
    """Run one seed-OT session; the sender side returns its selected seeds."""
    provider = provider or IdealDealer()
    if role == "receiver":
        provider.send_pairs(channel, value)
        return None
    if role == "sender":
        return provider.receive(channel, value)
    raise ValueError(f"unknown role {role!r}")
