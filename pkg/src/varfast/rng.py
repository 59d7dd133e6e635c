"""Deterministic, splittable random source.

Every random draw in the package flows through :class:`Rng`, a thin wrapper
around numpy's Philox 4x64 counter-based generator. Philox has fixed,
published round constants and produces the same stream for the same
``(seed, stream)`` key on every platform, independent of thread count; that
is what makes runs, benches, and verification reports reproducible
byte-for-byte.
"""

from __future__ import annotations

import os

import numpy as np

_U64 = 2**64


class Rng:
    """Seeded random source with cheap independent substreams.

    The key fed to Philox is the pair ``(seed, stream)``. Substreams are
    obtained with :meth:`split` and are statistically independent, so
    verifier trials can each own stream ``trial_index`` and produce results
    that do not depend on execution order.
    """

    def __init__(self, seed: int, stream: int = 0):
        seed = int(seed)
        stream = int(stream)
        if not 0 <= seed < _U64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")
        if not 0 <= stream < _U64:
            raise ValueError("stream must fit in an unsigned 64-bit integer")
        self.seed = seed
        self.stream = stream
        key = np.array([seed, stream], dtype=np.uint64)
        self._gen = np.random.Generator(np.random.Philox(key=key))

    def split(self, stream: int) -> "Rng":
        """Independent substream; ``(seed, stream)`` fully determines it."""
        return Rng(self.seed, stream)

    def uniform(self, low: float, high: float, shape=None) -> np.ndarray:
        return self._gen.uniform(low, high, size=shape)

    def integers(self, low: int, high: int) -> int:
        """One integer drawn uniformly from ``[low, high)``."""
        return int(self._gen.integers(low, high))

    def __repr__(self):
        return f"Rng(seed={self.seed}, stream={self.stream})"


def thread_cap() -> int:
    """Worker cap for internal trial parallelism.

    Read from ``VARFAST_THREADS`` (default 1). Results never depend on the
    value: trials own disjoint substreams and are reduced in trial order.
    """
    raw = os.environ.get("VARFAST_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        return 1
    return max(1, n)
