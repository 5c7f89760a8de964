from __future__ import annotations

import hashlib

import numpy as np


def derive_seed(seed: int, *path: object) -> int:
    """Stable 64-bit seed for a named sub-stage of a run.

    Hash-based so that stage seeds do not depend on the order in which stages
    are executed, nor on the process that executes them.
    """
    key = ":".join([str(int(seed))] + [str(p) for p in path]).encode()
    return int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "little")


def rng_for(seed: int, *path: object) -> np.random.Generator:
    return np.random.default_rng(derive_seed(seed, *path))
