"""
Seeded random streams.

Every stochastic call site draws from its own numpy ``Generator`` backed by
PCG64 (a 64-bit permuted congruential generator). A stream is identified by
``(seed, label)``; the label is hashed with SHA-256 so the mapping is stable
across processes and Python versions, unlike ``hash()``.
"""
import hashlib

import numpy as np


def _label_words(label: str) -> list:
    digest = hashlib.sha256(label.encode("utf-8")).digest()
    return [int.from_bytes(digest[i:i + 4], "little") for i in range(0, 16, 4)]


def stream(seed: int, label: str) -> np.random.Generator:
    """Independent generator for ``label`` under the run seed."""
    seed = int(seed)
    words = [seed & 0xFFFFFFFF, (seed >> 32) & 0xFFFFFFFF] + _label_words(label)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(words)))
