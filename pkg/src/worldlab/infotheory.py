"""Exact information measures over finite joint distributions.

All quantities are computed by direct summation over fully enumerated
probability tables, in nats.  Nothing here estimates; a divergence with an
absolute-continuity violation is an error, not infinity.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError

MASS_TOL = 1e-9


def neg_plogp(p: np.ndarray) -> float:
    """Sum of -p log p with 0 log 0 = 0, in nats."""
    p = np.asarray(p, dtype=float)
    pos = p[p > 0]
    return float(-(pos * np.log(pos)).sum())


@dataclass
class FiniteJointDistribution:
    """A named, exactly enumerated joint probability table."""

    variables: tuple[str, ...]
    mass: np.ndarray

    def __post_init__(self):
        self.mass = np.asarray(self.mass, dtype=float)
        self.variables = tuple(self.variables)
        if self.mass.ndim != len(self.variables):
            raise DomainError(
                f"{len(self.variables)} variables but mass has {self.mass.ndim} axes"
            )
        if len(set(self.variables)) != len(self.variables):
            dupes = sorted({v for v in self.variables if self.variables.count(v) > 1})
            raise DomainError(f"duplicate variable names: {dupes}")
        if np.any(self.mass < 0):
            raise DomainError("probability mass must be nonnegative")
        total = float(self.mass.sum())
        if abs(total - 1.0) > MASS_TOL:
            raise DomainError(f"mass sums to {total!r}, not 1")

    def axes_of(self, names: Iterable[str]) -> tuple[int, ...]:
        index = {v: k for k, v in enumerate(self.variables)}
        out = []
        for n in names:
            if n not in index:
                raise DomainError(f"unknown variable {n!r}; have {self.variables}")
            out.append(index[n])
        if len(set(out)) != len(out):
            raise DomainError(f"repeated variable in {list(names)}")
        return tuple(out)

    def marginal(self, names: Sequence[str]) -> np.ndarray:
        """Marginal table over ``names`` in the given order."""
        keep = self.axes_of(names)
        drop = tuple(i for i in range(self.mass.ndim) if i not in keep)
        marg = self.mass.sum(axis=drop) if drop else self.mass
        if len(keep) > 1:
            # sum() left the kept axes in original order; put them in request order
            remaining = sorted(keep)
            marg = np.transpose(marg, axes=[remaining.index(k) for k in keep])
        return marg


def entropy(
    dist: FiniteJointDistribution,
    names: Sequence[str] | None = None,
    given: Sequence[str] = (),
) -> float:
    """H(names | given) in nats; names=None means all non-conditioned variables."""
    if names is None:
        names = [v for v in dist.variables if v not in set(given)]
    overlap = set(names) & set(given)
    if overlap:
        raise DomainError(f"variables on both sides: {sorted(overlap)}")
    h_joint = neg_plogp(dist.marginal(list(names) + list(given)))
    if not given:
        return h_joint
    return h_joint - neg_plogp(dist.marginal(list(given)))


def mutual_information(
    dist: FiniteJointDistribution,
    x: Sequence[str],
    y: Sequence[str],
    given: Sequence[str] = (),
) -> float:
    """I(x ; y | given) = H(x | given) - H(x | y, given), in nats."""
    if set(x) & set(y):
        raise DomainError(f"x and y overlap: {sorted(set(x) & set(y))}")
    return entropy(dist, x, given) - entropy(dist, x, list(y) + list(given))


def kl_divergence(p: np.ndarray, q: np.ndarray) -> float:
    """KL(p || q) by direct summation; p must be absolutely continuous wrt q."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise DomainError(f"shape mismatch {p.shape} vs {q.shape}")
    bad = (p > 0) & (q == 0)
    if bad.any():
        atom = np.unravel_index(int(np.argmax(bad)), p.shape)
        raise DomainError(f"support violation: p{tuple(atom)} > 0 but q{tuple(atom)} = 0")
    mask = p > 0
    return float((p[mask] * (np.log(p[mask]) - np.log(q[mask]))).sum())


def joint_kl(p: FiniteJointDistribution, q: FiniteJointDistribution) -> float:
    if p.variables != q.variables:
        raise DomainError(f"variable mismatch {p.variables} vs {q.variables}")
    return kl_divergence(p.mass, q.mass)
