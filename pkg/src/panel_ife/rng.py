"""Counter-based random streams.

All randomness in the library flows through Philox streams keyed by a user
seed plus an integer path, so replicates drawn in parallel are bit-identical
to a serial run regardless of worker count or execution order.
"""

from __future__ import annotations

import numpy as np


def substream(seed: int, *path: int) -> np.random.Generator:
    """Independent generator for the given (seed, path) pair."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(seed: int, *path: int) -> int:
    """A 63-bit child seed usable as the entropy of a nested stream family."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(p) for p in path))
    return int(ss.generate_state(1, np.uint64)[0] >> np.uint64(1))
