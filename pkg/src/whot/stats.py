"""Transcript statistics and closed-form communication prediction.

Byte totals are reported in MiB (2**20 bytes): the semi-honest run at
m = 1.25e6, n = 16, ell = 4 moves 50,000,000 extension bytes, i.e. 47.68 MiB.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import TYPE_CHECKING, Any

from .bitops import nbytes_for
from .wire import CATEGORIES, FRAME_OVERHEAD, HELLO, MsgType

if TYPE_CHECKING:
    from .params import Params

MIB = 1 << 20
EXTENSION_CATEGORIES = ("matrix_d", "coin_toss", "checks", "masked")
TIME_PHASES = ("seed_ot", "phase1", "check", "phase2", "total")


def mib(n_bytes: int | float) -> float:
    return n_bytes / MIB


@dataclass
class TranscriptStats:
    params: dict[str, Any]
    mode: str
    bytes: dict[str, int] = field(default_factory=lambda: {c: 0 for c in CATEGORIES})
    time_ms: dict[str, float] = field(default_factory=lambda: {p: 0.0 for p in TIME_PHASES})
    batches: int = 0
    aborted: bool = False
    abort_reason: str | None = None
    messages: dict[str, int] = field(default_factory=dict)

    @property
    def total(self) -> int:
        return sum(self.bytes[c] for c in CATEGORIES)

    @property
    def extension_bytes(self) -> int:
        return sum(self.bytes[c] for c in EXTENSION_CATEGORIES)

    def to_dict(self) -> dict[str, Any]:
        out = asdict(self)
        out["bytes"] = {c: int(self.bytes[c]) for c in CATEGORIES}
        out["bytes"]["total"] = self.total
        out["time_ms"] = {p: round(float(self.time_ms[p]), 3) for p in TIME_PHASES}
        del out["messages"]
        return out

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    def write(self, path: str) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_json(indent=2, sort_keys=True))
            fh.write("\n")


def batch_sizes(m: int, batch_size: int) -> list[int]:
    full, rest = divmod(m, batch_size)
    return [batch_size] * full + ([rest] if rest else [])


def predict_bytes(params: Params) -> dict[str, int]:
    """Exact byte counts one endpoint observes (both directions) for a full session."""
    kappa, mu, n, ell = params.kappa, params.mu, params.n, params.ell
    active = params.is_active
    pred = {c: 0 for c in CATEGORIES}
    frames = 2  # one HELLO each way
    pred["framing"] = 2 * HELLO.size
    for size in batch_sizes(params.m, params.batch_size):
        rows = size + mu
        pred["base_ot"] += 2 * kappa * nbytes_for(kappa)
        pred["matrix_d"] += kappa * nbytes_for(rows)
        pred["masked"] += nbytes_for(size * n * ell)
        frames += 4  # SEEDPAIRS, SEEDPAIRS_ACK, MATRIX_D, MASKED
        if active:
            pred["coin_toss"] += 2 * nbytes_for(kappa)
            pred["checks"] += 3 * mu
            frames += 3  # COIN_R, COIN_S, CHECKS
    pred["framing"] += frames * FRAME_OVERHEAD
    pred["total"] = sum(pred[c] for c in CATEGORIES)
    pred["extension"] = sum(pred[c] for c in EXTENSION_CATEGORIES)
    return pred


def measure_vs_predict(stats: TranscriptStats, predicted: dict[str, int], tolerance: float = 0.02) -> dict[str, Any]:
    """Per-category relative error of measured vs predicted bytes.

    ``extension_ok`` gates the extension categories at ``tolerance``.
    """
    rows = {}
    for cat in (*CATEGORIES, "extension", "total"):
        measured = stats.extension_bytes if cat == "extension" else stats.total if cat == "total" else stats.bytes[cat]
        expected = predicted[cat]
        if expected:
            rel = abs(measured - expected) / expected
        else:
            rel = 0.0 if measured == 0 else float("inf")
        rows[cat] = {"measured": measured, "predicted": expected, "rel_error": rel}
    ok = all(rows[c]["rel_error"] <= tolerance for c in EXTENSION_CATEGORIES)
    return {"categories": rows, "extension_ok": ok, "tolerance": tolerance}


def messages_per_batch(active: bool) -> tuple[MsgType, ...]:
    base = (MsgType.SEEDPAIRS, MsgType.SEEDPAIRS_ACK, MsgType.MATRIX_D)
    checks = (MsgType.COIN_R, MsgType.COIN_S, MsgType.CHECKS) if active else ()
    return base + checks + (MsgType.MASKED,)
