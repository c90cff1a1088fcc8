import math

import numpy as np
import pytest

from worldlab.errors import DomainError
from worldlab.infotheory import (
    FiniteJointDistribution,
    entropy,
    joint_kl,
    kl_divergence,
    mutual_information,
    neg_plogp,
)


def xor_joint() -> FiniteJointDistribution:
    """x, y fair and independent, z = x xor y."""
    mass = np.zeros((2, 2, 2))
    for x in range(2):
        for y in range(2):
            mass[x, y, x ^ y] = 0.25
    return FiniteJointDistribution(variables=("x", "y", "z"), mass=mass)


def test_neg_plogp_known_values():
    assert neg_plogp(np.array([0.5, 0.5])) == pytest.approx(math.log(2))
    assert neg_plogp(np.array([1.0, 0.0])) == 0.0
    assert neg_plogp(np.full(8, 0.125)) == pytest.approx(math.log(8))


def test_entropy_marginal_and_conditional():
    d = xor_joint()
    log2 = math.log(2)
    assert entropy(d, ["x"]) == pytest.approx(log2)
    assert entropy(d) == pytest.approx(2 * log2)
    # z is determined by (x, y)
    assert entropy(d, ["z"], given=["x", "y"]) == pytest.approx(0.0, abs=1e-12)
    assert entropy(d, ["z"], given=["x"]) == pytest.approx(log2)
    with pytest.raises(DomainError):
        entropy(d, ["x"], given=["x"])


def test_mutual_information_xor():
    d = xor_joint()
    log2 = math.log(2)
    assert mutual_information(d, ["x"], ["z"]) == pytest.approx(0.0, abs=1e-12)
    assert mutual_information(d, ["x"], ["z"], given=["y"]) == pytest.approx(log2)
    assert mutual_information(d, ["x", "y"], ["z"]) == pytest.approx(log2)
    with pytest.raises(DomainError):
        mutual_information(d, ["x"], ["x"])


def test_chain_rule_on_random_joint():
    rng = np.random.default_rng(3)
    mass = rng.gamma(1.0, 1.0, size=(3, 4, 2))
    mass /= mass.sum()
    d = FiniteJointDistribution(variables=("a", "b", "c"), mass=mass)
    lhs = entropy(d)
    rhs = entropy(d, ["a"]) + entropy(d, ["b"], given=["a"]) + entropy(
        d, ["c"], given=["a", "b"]
    )
    assert lhs == pytest.approx(rhs, abs=1e-12)


def test_marginal_respects_requested_order():
    rng = np.random.default_rng(9)
    mass = rng.gamma(1.0, 1.0, size=(2, 3, 4))
    mass /= mass.sum()
    d = FiniteJointDistribution(variables=("a", "b", "c"), mass=mass)
    forward = d.marginal(["b", "c"])
    backward = d.marginal(["c", "b"])
    assert forward.shape == (3, 4)
    assert backward.shape == (4, 3)
    assert np.allclose(forward, backward.T)


def test_joint_validation():
    with pytest.raises(DomainError):
        FiniteJointDistribution(variables=("a",), mass=np.array([0.4, 0.4]))
    with pytest.raises(DomainError):
        FiniteJointDistribution(variables=("a", "a"), mass=np.full((2, 2), 0.25))
    with pytest.raises(DomainError):
        FiniteJointDistribution(variables=("a", "b"), mass=np.full((2,), 0.5))


def test_kl_properties():
    p = np.array([0.5, 0.5])
    q = np.array([0.75, 0.25])
    kl = kl_divergence(p, q)
    assert kl == pytest.approx(0.5 * math.log(0.5 / 0.75) + 0.5 * math.log(0.5 / 0.25))
    assert kl > 0
    assert kl_divergence(p, p) == 0.0
    with pytest.raises(DomainError):
        kl_divergence(np.array([0.5, 0.5]), np.array([1.0, 0.0]))
    with pytest.raises(DomainError):
        kl_divergence(np.array([0.5, 0.5]), np.array([[1.0], [0.0]]))


def test_kl_nonnegative_randomized():
    rng = np.random.default_rng(11)
    for _ in range(50):
        p = rng.gamma(1.0, 1.0, size=6)
        q = rng.gamma(1.0, 1.0, size=6)
        p /= p.sum()
        q /= q.sum()
        assert kl_divergence(p, q) >= -1e-15


def test_joint_kl_requires_same_variables():
    d = xor_joint()
    other = FiniteJointDistribution(variables=("x", "y", "w"), mass=d.mass)
    with pytest.raises(DomainError):
        joint_kl(d, other)
    assert joint_kl(d, d) == 0.0
