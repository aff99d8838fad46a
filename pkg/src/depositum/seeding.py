"""Counter-based random streams: one independent generator per (client, t).

Streams are derived with SeedSequence spawn keys, so they are collision-free
across clients and iterations and independent of the order in which they are
instantiated.  Harness-level draws (dataset synthesis, partitioning, model
init) use reserved client ids far above any real client index.
"""

from __future__ import annotations

import numpy as np

DATA_STREAM = 2**32
PARTITION_STREAM = 2**32 + 1
INIT_STREAM = 2**32 + 2


def rng_stream(seed: int, client: int, iteration: int) -> np.random.Generator:
    """Independent generator for one (client, iteration) cell of one seed."""
    if client < 0 or iteration < 0:
        raise ValueError(f"client and iteration must be >= 0, got {client}, {iteration}")
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(client), int(iteration)))
    return np.random.default_rng(ss)
