"""Seeded random streams.

Every stochastic stage in the package draws from a Philox counter-based
generator keyed by a master seed plus a string/int path, so independent
streams can be handed out per stage, per restart, or per record index
without any coordination. Deriving the same (seed, path) always yields the
same stream, regardless of how many other streams were created in between.
"""

from __future__ import annotations

import hashlib

import numpy as np


def derive_key(seed: int, *path: int | str) -> int:
    """Hash (seed, path) into a 128-bit Philox key."""
    h = hashlib.sha256()
    h.update(str(int(seed)).encode("ascii"))
    for part in path:
        h.update(b"/")
        h.update(str(part).encode("utf-8"))
    return int.from_bytes(h.digest()[:16], "little")


def stream(seed: int, *path: int | str) -> np.random.Generator:
    """Independent generator for the given master seed and path."""
    return np.random.Generator(np.random.Philox(key=derive_key(seed, *path)))


def derive_seed(seed: int, *path: int | str) -> int:
    """63-bit integer seed for handing to APIs that take a plain seed."""
    return derive_key(seed, *path) % (1 << 63)
