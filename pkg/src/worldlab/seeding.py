"""Deterministic 64-bit seed derivation.

A master seed fans out to per-instance seeds through the splitmix64
finalizer.  The scheme is pure integer arithmetic, identical on every
platform, and is recorded in dataset manifests so a run can be reproduced
from the manifest alone.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1

SEED_SCHEME = "splitmix64-v1"


def splitmix64(x: int) -> int:
    """One splitmix64 finalization round of x (64-bit)."""
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return (z ^ (z >> 31)) & MASK64


def mix_seed(master_seed: int, *parts: int | str) -> int:
    """Derive a child seed from a master seed and a sequence of parts.

    Strings are folded in bytewise so task names and split names act as
    distinct namespaces.  The chain is order-sensitive.
    """
    state = splitmix64(master_seed & MASK64)
    for part in parts:
        if isinstance(part, str):
            for b in part.encode("utf-8"):
                state = splitmix64(state ^ b)
        else:
            state = splitmix64(state ^ (part & MASK64))
    return state


def instance_seed(master_seed: int, task: str, split: str, index: int) -> int:
    """Seed for one generated instance."""
    return mix_seed(master_seed, task, split, index)
