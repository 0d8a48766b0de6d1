"""Deterministic seeding utilities.

Every sampling routine in the package takes an explicit seed and builds a
``numpy.random.Generator`` locally, so runs are reproducible and parallel
workers can derive independent streams from (master seed, label path) pairs
without coordination.
"""

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def seed_derive(master_seed, labels):
    """Derive a 64-bit sub-seed from a master seed and a path of labels.

    The derivation hashes the decimal master seed and the label path with
    BLAKE2b, so it is collision-resistant, platform-independent, and stable
    across releases.

    Args:
        master_seed: nonnegative integer seed (any size; reduced mod 2^64).
        labels: nonempty sequence of strings or integers naming the task path,
            e.g. ``("franz-leone", "ksat", "N=8", 3)``.

    Returns:
        Integer in [0, 2^64).
    """
    labels = tuple(labels)
    if len(labels) == 0:
        raise ValueError("label path must be nonempty")
    h = hashlib.blake2b(digest_size=8)
    h.update(str(int(master_seed) & _MASK64).encode("ascii"))
    for lab in labels:
        h.update(b"/")
        h.update(str(lab).encode("utf-8"))
    return int.from_bytes(h.digest(), "little")


def make_rng(seed, *labels):
    """Return a numpy Generator for the given seed (optionally sub-derived).

    ``make_rng(s)`` seeds directly with s; ``make_rng(s, "a", 1)`` first
    derives a sub-seed for the label path ("a", 1).
    """
    if labels:
        seed = seed_derive(seed, labels)
    return np.random.default_rng(int(seed) & _MASK64)


def child_seeds(seed, label, n):
    """n independent sub-seeds for tasks label/0 .. label/n-1."""
    return [seed_derive(seed, (label, i)) for i in range(n)]
