"""Counter-based seed derivation.

Replicate ``k`` of a run with root seed ``s`` always uses ``derive_seed(s, k)``,
so results do not depend on execution order or thread count.
"""

from __future__ import annotations

import numpy as np


def derive_seed(root: int, *keys: int) -> int:
    """Deterministically derive a 63-bit child seed from ``root`` and ``keys``."""
    ss = np.random.SeedSequence(entropy=int(root), spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def make_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def split_streams(seed, count: int) -> list[np.random.Generator]:
    """Independent generators that are a pure function of ``seed``.

    Stream ``i`` is the same regardless of ``count``, which lets two generators
    share a seed-consumption protocol (e.g. Gaussian vs. elliptical designs).
    """
    return [np.random.default_rng(derive_seed(seed, i)) for i in range(count)]
