"""Counter-based RNG substreams for reproducible Monte Carlo."""

import numpy as np


def substream(seed: int, stream: int = 0) -> np.random.Generator:
    """Independent Philox stream keyed by (seed, stream).

    Path j simulated on stream j is bit-identical regardless of how work
    is scheduled across threads or processes.
    """
    return np.random.Generator(np.random.Philox(key=[seed, stream]))
