import json

import numpy as np
import pytest

from worldlab.errors import DomainError, PreconditionError
from worldlab.transfer import (
    DRIFT_TOL,
    TransferProblem,
    check_transfer_bounds,
    measure_growth_constant,
    measure_lipschitz_constant,
    random_transfer_problem,
    transfer_suite,
)


def tiny_problem() -> TransferProblem:
    grid = np.array([[0.0], [1.0], [2.0]])
    loss = np.array([[0.0, 1.0], [0.5, 0.5], [1.0, 0.0]])
    return TransferProblem(
        p_dist=np.array([0.9, 0.1]),
        q_dist=np.array([0.6, 0.4]),
        theta_grid=grid,
        loss=loss,
    )


def test_validation():
    with pytest.raises(DomainError):
        TransferProblem(
            p_dist=np.array([0.5, 0.6]),
            q_dist=np.array([0.5, 0.5]),
            theta_grid=np.array([[0.0], [1.0]]),
            loss=np.zeros((2, 2)),
        )
    with pytest.raises(DomainError):
        TransferProblem(
            p_dist=np.array([0.5, 0.5]),
            q_dist=np.array([0.5, 0.5]),
            theta_grid=np.array([[0.0], [1.0]]),
            loss=np.full((2, 2), 1.5),
        )
    with pytest.raises(DomainError):
        TransferProblem(
            p_dist=np.array([0.5, 0.5]),
            q_dist=np.array([0.5, 0.5]),
            theta_grid=np.zeros((2, 3)),
            loss=np.zeros((2, 2)),
        )


def test_total_variation_and_risks():
    prob = tiny_problem()
    assert prob.total_variation == pytest.approx(0.3)
    l_p, l_q = prob.risks()
    assert l_p == pytest.approx([0.1, 0.5, 0.9])
    assert l_q == pytest.approx([0.4, 0.5, 0.6])


def test_sup_risk_shift_bounded_by_tv():
    prob = tiny_problem()
    l_p, l_q = prob.risks()
    assert np.abs(l_q - l_p).max() <= prob.total_variation + 1e-12


def test_measured_constants_positive():
    checked = 0
    for seed in range(10):
        for dim in (1, 2):
            prob = random_transfer_problem(seed, dim=dim)
            try:
                mu, star = measure_growth_constant(prob)
            except PreconditionError:
                continue
            checked += 1
            assert mu > 0
            assert 0 <= star < prob.theta_grid.shape[0]
            assert measure_lipschitz_constant(prob) >= 0
    assert checked >= 10


def test_bounds_hold_over_random_problems():
    checked = 0
    for seed in range(20):
        dim = 1 + seed % 2
        prob = random_transfer_problem(seed, dim=dim)
        try:
            mu, _ = measure_growth_constant(prob)
        except PreconditionError:
            continue
        drift = float(np.sqrt(4.0 * prob.total_variation / mu))
        report = check_transfer_bounds(prob, radius=drift / 2, seed=seed)
        checked += 1
        assert report.passed, report.gaps
        for key in ("lemma1_slack", "lemma2_slack", "lemma3_slack", "theorem5_slack"):
            assert report.gaps[key] >= -DRIFT_TOL
    assert checked >= 10


def test_zero_bias_when_radius_covers_drift():
    checked = 0
    for seed in range(10):
        prob = random_transfer_problem(seed, dim=1)
        try:
            mu, _ = measure_growth_constant(prob)
        except PreconditionError:
            continue
        drift = float(np.sqrt(4.0 * prob.total_variation / mu))
        report = check_transfer_bounds(prob, radius=1.25 * drift + 1e-9, seed=seed)
        checked += 1
        assert report.passed
        assert report.quantities["eps_bias"] == 0.0
        assert report.gaps["exact_zero_when_radius_covers_drift"] is True
    assert checked >= 5


def test_check_rejects_bad_arguments():
    prob = tiny_problem()
    with pytest.raises(DomainError):
        check_transfer_bounds(prob, radius=-1.0)
    with pytest.raises(DomainError):
        check_transfer_bounds(prob, radius=1.0, n_samples=0)


def test_suite_passes_and_serializes():
    suite = transfer_suite(seed=0, count=8)
    assert suite.passed
    assert suite.count == 8
    blob = json.loads(json.dumps(suite.to_jsonable()))
    assert blob["passed"] is True
    again = transfer_suite(seed=0, count=8)
    assert again.to_jsonable() == suite.to_jsonable()
