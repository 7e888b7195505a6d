"""Deterministic seed derivation.

All randomness in an experiment flows from one master seed; child seeds are
derived by hashing the master together with structured tags (robot id,
cycle index, purpose).  SHA-256 keeps the rule stable across platforms and
Python processes, unlike the builtin hash().
"""

from __future__ import annotations

import hashlib


def child_seed(master: int, *parts) -> int:
    """Derive a 63-bit child seed from a master seed and tag parts."""
    text = str(int(master)) + "".join(f"|{p}" for p in parts)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") & 0x7FFFFFFFFFFFFFFF
