"""Seed bookkeeping shared by model building, training, and experiments."""

import hashlib

import numpy as np


def seed_for(seed: int, component: str) -> int:
    """Derive a component seed from the run seed.

    All randomness in a run flows from one seed; each component draws from
    its own stream keyed by name, so rerunning a single component
    reproduces its draws. The rule: low 8 bytes of sha256("<seed>:<name>").
    """
    digest = hashlib.sha256(f"{seed}:{component}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def rng_for(seed: int, component: str) -> np.random.Generator:
    return np.random.default_rng(seed_for(seed, component))
