import zlib

import numpy as np


def _tag(t):
    if isinstance(t, str):
        return zlib.crc32(t.encode())
    return int(t)


def rng_for(seed, *tags):
    """Independent generator for the stream ``(seed, *tags)``.

    String tags are hashed with CRC32 so a stream name stays stable across
    runs and platforms.
    """
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF] + [_tag(t) for t in tags]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def child_seed(seed, *tags):
    """A 64-bit integer seed derived from ``(seed, *tags)``."""
    return int(rng_for(seed, *tags).integers(0, 2**63 - 1))
