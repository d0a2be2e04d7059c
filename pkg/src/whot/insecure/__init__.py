"""Adversarial tooling: attack on the semi-honest mode and the extraction oracle.

Importing this package requires ``WHOT_INSECURE=1`` in the environment so the
attack paths are never enabled by accident.
"""

import os

if os.environ.get("WHOT_INSECURE") != "1":
    raise ImportError("whot.insecure holds attack code; set WHOT_INSECURE=1 to enable it")
