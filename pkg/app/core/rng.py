"""
Deterministic random streams

Every stream is derived from (master seed, index, purpose) through a numpy
SeedSequence spawn key, so a stream does not depend on which worker runs it
or in which order.
"""

import hashlib

import numpy as np


def purpose_key(purpose: str) -> int:
    """Stable 32-bit key of a purpose tag"""
    return int.from_bytes(hashlib.sha256(purpose.encode("utf-8")).digest()[:4], "little")


def stream(master_seed: int, index: int, purpose: str) -> np.random.Generator:
    """Independent generator for one (index, purpose) pair"""
    sequence = np.random.SeedSequence(entropy=master_seed, spawn_key=(index, purpose_key(purpose)))
    return np.random.default_rng(sequence)


def sub_seed(master_seed: int, index: int, purpose: str) -> int:
    """Integer seed of a stream, used where an API takes a plain seed"""
    sequence = np.random.SeedSequence(entropy=master_seed, spawn_key=(index, purpose_key(purpose)))
    return int(sequence.generate_state(1, dtype=np.uint32)[0])
