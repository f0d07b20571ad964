"""Seeding helpers: counter-based, splittable random streams.

Every experiment is fully determined by a single integer seed. Child streams
(environment noise, tracker draws, arm generation, ...) are derived by
spawning from one ``SeedSequence`` so they are independent and reproducible
regardless of scheduling.
"""
from __future__ import annotations

import numpy as np


def make_rng(seed=None) -> np.random.Generator:
    """Return a Philox-backed Generator. ``seed`` may be None, an int, or an
    existing Generator (returned unchanged)."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def split_rng(seed, n: int) -> list[np.random.Generator]:
    """Derive ``n`` independent child generators from one seed."""
    children = np.random.SeedSequence(seed).spawn(n)
    return [np.random.Generator(np.random.Philox(s)) for s in children]
