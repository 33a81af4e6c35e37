"""Reproducible counter-based random streams.

Every stochastic object in the package draws from a Philox generator
keyed by ``(seed, stream index)``.  Philox is counter-based, so streams
with different keys are statistically independent and a given
``(seed, index)`` pair always reproduces the same draws regardless of
how many other streams were consumed -- the property the byte-identical
rerun guarantee rests on.
"""

from __future__ import annotations

import numpy as np

__all__ = ["stream"]


def stream(seed, index=0):
    """Independent generator for stream ``index`` of a seeded run.

    Parameters
    ----------
    seed : int
        Run-level seed, nonnegative.
    index : int
        Stream index (trajectory number, particle block, ...).

    Returns
    -------
    numpy.random.Generator
    """
    seed = int(seed)
    index = int(index)
    if seed < 0 or index < 0:
        raise ValueError("seed and stream index must be nonnegative")
    key = np.array([seed, index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))
