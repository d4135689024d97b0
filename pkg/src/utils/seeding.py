"""Deterministic RNG stream derivation.

Every random draw in the package comes from a generator keyed by
``(master_seed, stream_label, counter)``: the label names the quantity being
sampled, the counter is the trial (or first trial of a chunk). The key goes
through numpy's ``SeedSequence`` spawn-key mechanism, so streams are
independent and identical whatever the scheduling of chunks across workers.
"""

from __future__ import annotations

import hashlib

import numpy as np

MASK_64 = (1 << 64) - 1


def label_code(label: str) -> int:
    """Stable 32-bit code for a stream label (``hash()`` is salted per process)."""
    digest = hashlib.blake2b(label.encode("utf-8"), digest_size=4).digest()
    return int.from_bytes(digest, "big")


def stream(seed: int, label: str, counter: int = 0) -> np.random.Generator:
    if counter < 0:
        raise ValueError("stream counter must be nonnegative")
    sequence = np.random.SeedSequence(
        entropy=int(seed) & MASK_64, spawn_key=(label_code(label), int(counter))
    )
    return np.random.Generator(np.random.PCG64(sequence))


__all__ = ["label_code", "stream"]
