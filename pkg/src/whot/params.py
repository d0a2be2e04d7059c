"""Protocol parameters."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

from .errors import ParameterError
from .whcode import is_power_of_two

SEMI_HONEST = "semi-honest"
ACTIVE = "active"
MODES = (SEMI_HONEST, ACTIVE)
MODE_CODES = {SEMI_HONEST: 0, ACTIVE: 1}

DEFAULT_KAPPA = 256
DEFAULT_MU = 96
DEFAULT_BATCH = 1 << 16


@dataclass(frozen=True)
class Params:
    """``(kappa, mu, m, n, ell)`` plus mode and batch size.

    ``mu`` is both the number of padding rows and the number of check
    iterations; it is 0 in semi-honest mode.
    """

    m: int
    n: int
    ell: int
    kappa: int = DEFAULT_KAPPA
    mu: int = DEFAULT_MU
    mode: str = ACTIVE
    batch_size: int = DEFAULT_BATCH

    def __post_init__(self):
        if self.mode not in MODES:
            raise ParameterError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not is_power_of_two(self.kappa) or not 8 <= self.kappa <= 1 << 15:
            raise ParameterError(f"kappa must be a power of two in [8, 32768], got {self.kappa}")
        if not is_power_of_two(self.n) or not 2 <= self.n <= self.kappa:
            raise ParameterError(f"n must be a power of two with 2 <= n <= kappa, got n={self.n}, kappa={self.kappa}")
        if not 1 <= self.ell <= 256:
            raise ParameterError(f"ell must be in [1, 256], got {self.ell}")
        if self.m < 1:
            raise ParameterError(f"m must be >= 1, got {self.m}")
        if not 1 <= self.batch_size < 1 << 32:
            raise ParameterError(f"batch_size must be in [1, 2**32), got {self.batch_size}")
        if self.mode == ACTIVE and not 1 <= self.mu < 1 << 16:
            raise ParameterError(f"active mode needs 1 <= mu < 65536, got {self.mu}")
        if self.mode == SEMI_HONEST and self.mu != 0:
            raise ParameterError("semi-honest mode uses mu = 0")

    @classmethod
    def create(cls, m: int, n: int, ell: int, *, mode: str = ACTIVE, kappa: int = DEFAULT_KAPPA,
               mu: int = DEFAULT_MU, batch_size: int = DEFAULT_BATCH) -> Params:
        """Like the constructor, but drops ``mu`` to 0 for semi-honest mode."""
        return cls(m=m, n=n, ell=ell, kappa=kappa, mu=mu if mode == ACTIVE else 0, mode=mode,
                   batch_size=batch_size)

    @property
    def is_active(self) -> bool:
        return self.mode == ACTIVE

    @property
    def mode_code(self) -> int:
        return MODE_CODES[self.mode]

    @property
    def value_bytes(self) -> int:
        return (self.ell + 7) // 8

    def batches(self) -> list[tuple[int, int]]:
        """``(offset, size)`` of every batch, in order."""
        out = []
        offset = 0
        while offset < self.m:
            size = min(self.batch_size, self.m - offset)
            out.append((offset, size))
            offset += size
        return out

    def replace(self, **changes) -> Params:
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)
