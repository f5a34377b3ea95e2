"""Seed fan-out.

A single user-facing seed is split into named substreams (shuffle, draws,
tie-breaks, init) so that every consumer gets an independent generator and
parallel execution over draws or datasets reproduces the serial results.
"""

from __future__ import annotations

import numpy as np


def substream(seed: int, name: str) -> np.random.Generator:
    """Deterministic generator for ``name`` derived from the master seed."""
    if seed < 0:
        raise ValueError("seed must be a non-negative integer")
    entropy = [int(seed), len(name)] + list(name.encode("utf-8"))
    return np.random.default_rng(np.random.SeedSequence(entropy))
