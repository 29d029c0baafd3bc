"""Seeded random-stream derivation.

All randomness in the package flows through counter-based Philox generators
derived from a single root seed.  A stream is addressed by a path of labels
(strings or ints); the same path always yields the same stream, and distinct
paths yield statistically independent streams.  This gives common random
numbers across policies (same arrival streams) and makes every experiment
cell independent of every other cell's parameters.
"""

from __future__ import annotations

import hashlib
import os

import numpy as np
from numpy.random import Generator, Philox, SeedSequence

ROOT_SEED_ENV = "ENDGAME_SEED"
DEFAULT_ROOT_SEED = 0


def resolve_root_seed(explicit: int | None = None) -> int:
    """Explicit seed, else the ENDGAME_SEED env var, else 0."""
    if explicit is not None:
        return int(explicit)
    env = os.environ.get(ROOT_SEED_ENV)
    if env is not None:
        return int(env)
    return DEFAULT_ROOT_SEED


def _component_to_int(part) -> int:
    if isinstance(part, (int, np.integer)):
        return int(part) & 0xFFFFFFFFFFFFFFFF
    digest = hashlib.sha256(str(part).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def stream_seed(root_seed: int, *path) -> SeedSequence:
    """Deterministic SeedSequence for a labeled sub-stream."""
    entropy = (int(root_seed),) + tuple(_component_to_int(p) for p in path)
    return SeedSequence(entropy)


def stream(root_seed: int, *path) -> Generator:
    """Philox generator for a labeled sub-stream."""
    return Generator(Philox(stream_seed(root_seed, *path)))
