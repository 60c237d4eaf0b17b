"""Named random streams derived from one experiment seed.

Each stream is ``SeedSequence(seed, spawn_key=(index,))`` with a fixed index per
name, so adding a consumer of one stream never shifts the draws of another.
"""
import numpy as np

STREAMS = {"train": 0, "eval": 1, "env": 2}


def stream(seed: int, name: str) -> np.random.Generator:
    if name not in STREAMS:
        raise KeyError(f"unknown stream {name!r}; expected one of {sorted(STREAMS)}")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(STREAMS[name],))))
