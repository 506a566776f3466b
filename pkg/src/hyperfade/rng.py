"""Deterministic random streams."""

from __future__ import annotations

import os

import numpy as np

DEFAULT_SEED = 20260117


def default_seed() -> int:
    env = os.environ.get("HYPERFADE_SEED")
    return int(env) if env else DEFAULT_SEED


def make_rng(seed, stream: int = 0) -> np.random.Generator:
    """Generator for ``(seed, stream)``.

    Passing a Generator returns it unchanged so callers can thread one
    stream through several draws.
    """
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, np.random.SeedSequence):
        ss = np.random.SeedSequence(seed.entropy, spawn_key=seed.spawn_key + (stream,))
    else:
        ss = np.random.SeedSequence(int(seed), spawn_key=(stream,))
    return np.random.Generator(np.random.PCG64(ss))


def worker_seeds(seed, workers: int):
    """One SeedSequence per worker, derived from (seed, worker index)."""
    base = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(int(seed))
    return [
        np.random.SeedSequence(base.entropy, spawn_key=base.spawn_key + (1000 + k,))
        for k in range(workers)
    ]


def split_counts(n: int, parts: int):
    q, r = divmod(n, parts)
    return [q + (1 if k < r else 0) for k in range(parts)]


def open_uniform(rng: np.random.Generator, n: int) -> np.ndarray:
    """Uniform draws strictly inside (0, 1)."""
    u = rng.random(n)
    u[u == 0.0] = 2.0**-54
    return u
