"""Counter-style seeding: every (seed, stream, block) triple gets its own generator.

Results that are assembled from blocks therefore do not depend on how the
blocks were scheduled across workers.
"""

import numpy as np

BLOCK = 1 << 16


def block_rng(seed: int, *key: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed) & ((1 << 64) - 1), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def blocks(n: int, block: int = BLOCK):
    """Yield (block_index, size) pairs covering ``n`` items."""
    b = 0
    start = 0
    while start < n:
        size = min(block, n - start)
        yield b, size
        b += 1
        start += size
