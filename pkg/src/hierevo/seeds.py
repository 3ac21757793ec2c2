"""Deterministic derivation of per-task random seeds.

Every unit of work (trial, replicate, per-count sampling stream) gets its own
seed derived from the master seed plus identifying labels, so results never
depend on scheduling or worker count.
"""

from __future__ import annotations

import hashlib


def stable_seed(*parts) -> int:
    """Collapse the given labels into a reproducible 64-bit seed."""
    text = "\x1f".join(str(p) for p in parts)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")
