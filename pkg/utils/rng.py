"""
Random stream derivation for Monte Carlo runs.

A run with seed s is cut into shards of SHARD_SIZE samples; shard i draws from
Philox keyed by SeedSequence(s, spawn_key=(i,)). Shard boundaries depend only on
the sample count and SHARD_SIZE, never on the worker count, so a batch is a pure
function of (model, samples, seed).
"""

import hashlib
from typing import List

import numpy as np

SEED_MASK = (1 << 64) - 1


def shard_generator(seed: int, shard: int) -> np.random.Generator:
    sequence = np.random.SeedSequence(int(seed) & SEED_MASK, spawn_key=(int(shard),))
    return np.random.Generator(np.random.Philox(sequence))


def shard_sizes(samples: int, shard_size: int) -> List[int]:
    full, rest = divmod(int(samples), int(shard_size))
    return [int(shard_size)] * full + ([rest] if rest else [])


def derive_seed(seed: int, n: int) -> int:
    """seed XOR a 64-bit digest of n, used for the per-n runs of a sweep"""
    digest = hashlib.blake2b(str(int(n)).encode("ascii"), digest_size=8).digest()
    return (int(seed) ^ int.from_bytes(digest, "little")) & SEED_MASK
