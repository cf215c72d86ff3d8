"""Seeded random substreams.

Every stochastic operation in the package draws from its own substream so that
changing one stage's consumption pattern never shifts another stage's draws.
A substream is a numpy PCG64 generator whose seed is derived by hashing the
user seed together with an operation tag:

    substream_seed = first 8 bytes (little-endian) of SHA-256("tag:seed")

PCG64 is numpy's default, documented, portable 64-bit generator; given the
same (seed, tag) the stream is identical on every platform.
"""

import hashlib

import numpy as np


def substream(seed: int, tag: str) -> np.random.Generator:
    """Return the deterministic generator for (seed, tag)."""
    digest = hashlib.sha256(f"{tag}:{seed}".encode("utf-8")).digest()
    return np.random.default_rng(int.from_bytes(digest[:8], "little"))
