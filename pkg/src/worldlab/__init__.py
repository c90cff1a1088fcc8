"""Deterministic puzzle-world engine.

Exact solvers and generators for six observation-centric puzzle tasks,
chain-of-thought dataset synthesis in implicit/verbal/visual formats,
prediction scoring, and numerical certification of the information-theoretic
bounds that motivate the whole construction.
"""

__version__ = "0.1.0"

from .errors import (
    CapacityError,
    ConsistencyError,
    DecodeError,
    DegeneracyError,
    DomainError,
    GenerationError,
    PreconditionError,
    UnsolvableError,
    WorldlabError,
)

__all__ = [
    "WorldlabError",
    "DomainError",
    "CapacityError",
    "DegeneracyError",
    "GenerationError",
    "UnsolvableError",
    "ConsistencyError",
    "DecodeError",
    "PreconditionError",
    "__version__",
]
