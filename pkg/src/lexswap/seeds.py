"""Stable RNG derivation so parallel runs stay byte-reproducible."""

from __future__ import annotations

import hashlib
import random


def derived_rng(*parts: object) -> random.Random:
    """Return a Random seeded from a stable hash of the given parts.

    Python's builtin hash() is salted per process, so substreams are
    derived through sha256 instead. Any worker that processes the same
    (seed, sentence id, ...) tuple gets the same stream, which makes
    generation output independent of scheduling.
    """
    key = "\x1f".join(str(p) for p in parts)
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))
