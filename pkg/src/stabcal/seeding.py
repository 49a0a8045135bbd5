"""Deterministic per-name random streams.

Sampled quantities (gate-angle errors, channel probabilities) are keyed by
stable string tags rather than draw order, so adding qubits or moments to a
circuit never perturbs the draws of the parts that were already there.
"""

from __future__ import annotations

import hashlib

import numpy as np


def derived_rng(seed: int, *tags: object) -> np.random.Generator:
    """Generator seeded by `seed` plus a hash of the given tags."""
    digest = hashlib.sha256(repr(tags).encode()).digest()
    entropy = int.from_bytes(digest[:16], "big")
    return np.random.default_rng(np.random.SeedSequence([int(seed), entropy]))
