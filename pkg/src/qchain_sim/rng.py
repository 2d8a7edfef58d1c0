"""Seed handling.

Every random draw in the simulator comes from a numpy ``Generator`` built
from a 64-bit seed. Sub-streams are derived by hashing the master seed with
a label, so adding a new consumer never shifts the draws of existing ones.
"""

from __future__ import annotations

import hashlib

import numpy as np

SEED_MAX = 2**64 - 1


def derive_seed(master_seed: int, *labels: object) -> int:
    """``sha256(master_seed || label_0 || label_1 ...)`` truncated to 64 bits."""
    if not 0 <= master_seed <= SEED_MAX:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {master_seed}")
    h = hashlib.sha256(master_seed.to_bytes(8, "big"))
    for label in labels:
        if isinstance(label, int):
            h.update(b"i" + label.to_bytes(8, "big", signed=True))
        else:
            h.update(b"s" + str(label).encode() + b"\x00")
    return int.from_bytes(h.digest()[:8], "big")


def make_rng(seed: int, *labels: object) -> np.random.Generator:
    if labels:
        seed = derive_seed(seed, *labels)
    return np.random.Generator(np.random.PCG64(seed))
