"""Child-seed derivation: a 64-bit hash of (master seed, purpose tag, indices)."""
from __future__ import annotations

import hashlib

import numpy as np


def derive_seed(master: int, tag: str, *indices: int) -> int:
    text = ":".join([str(int(master)), tag, *(str(int(i)) for i in indices)])
    return int.from_bytes(hashlib.blake2b(text.encode(), digest_size=8).digest(), "little")


def child_rng(master: int, tag: str, *indices: int) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master, tag, *indices))
