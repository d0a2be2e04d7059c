"""Actively secure 1-out-of-n OT extension for short secrets, plus tooling.

The adversarial code (attack on the semi-honest mode, extraction oracle) lives
in :mod:`whot.insecure` and only imports when ``WHOT_INSECURE=1`` is set.
"""

from .bitops import BitMatrix, BitVector
from .errors import AbortReason, CheckFailed, HandshakeRefused, SessionAbort
from .otext import run_local, run_receiver, run_sender, run_session
from .params import ACTIVE, SEMI_HONEST, Params
from .stats import TranscriptStats, measure_vs_predict, predict_bytes
from .whcode import WHCode, build_code

__all__ = [
    "ACTIVE",
    "AbortReason",
    "BitMatrix",
    "BitVector",
    "CheckFailed",
    "HandshakeRefused",
    "Params",
    "SEMI_HONEST",
    "SessionAbort",
    "TranscriptStats",
    "WHCode",
    "build_code",
    "measure_vs_predict",
    "predict_bytes",
    "run_local",
    "run_receiver",
    "run_sender",
    "run_session",
]
