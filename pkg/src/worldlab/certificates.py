"""Numerical certificates for the reasoning-decomposition bounds.

Each check enumerates a finite oracle process exactly and verifies an
identity or inequality to a stated tolerance.  Nothing is sampled, so a
failed certificate is a genuine counterexample, not noise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cotprocess import (
    CoTJoint,
    FactoredCoTModel,
    OracleCoTProcess,
    deterministic_observable_oracle,
    enumerate_cot_joint,
    random_cot_oracle,
    random_factored_model,
)
from .errors import DomainError, PreconditionError

GAIN_NONNEG_TOL = 1e-12
EQUALITY_TOL = 1e-9
ZERO_GAIN_TOL = 1e-12


@dataclass
class TheoremReport:
    """Outcome of one certificate: measured quantities and tolerance gaps."""

    name: str
    passed: bool
    tolerance: float
    quantities: dict = field(default_factory=dict)
    gaps: dict = field(default_factory=dict)

    def to_jsonable(self) -> dict:
        return {
            "name": self.name,
            "passed": bool(self.passed),
            "tolerance": self.tolerance,
            "quantities": {k: _jsonable(v) for k, v in self.quantities.items()},
            "gaps": {k: _jsonable(v) for k, v in self.gaps.items()},
        }


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def _masked_kl_terms(p_joint: np.ndarray, target_axis: int, model_table: np.ndarray) -> float:
    """E_p[KL(p(target | prefix) || model(target | prefix))] for one step.

    p_joint has the full observation-level axes; the prefix is every axis
    before ``target_axis``.
    """
    trailing = tuple(range(target_axis + 1, p_joint.ndim))
    upto = p_joint.sum(axis=trailing) if trailing else p_joint
    prefix = upto.sum(axis=-1, keepdims=True)
    mask = upto > 0
    if np.any(mask & (model_table <= 0)):
        raise DomainError("model assigns zero probability on the oracle's support")
    out = np.zeros_like(upto)
    np.divide(upto, np.broadcast_to(prefix, upto.shape), out=out, where=mask)
    vals = upto[mask] * (np.log(out[mask]) - np.log(model_table[mask]))
    return float(vals.sum())


def check_theorem1(
    joint: CoTJoint, model: FactoredCoTModel, tol: float = EQUALITY_TOL
) -> TheoremReport:
    """Certify the error-decomposition identity and its projection bound.

    The joint divergence between the oracle's observation-level process and
    the factored model (conditioned on question and initial observation,
    averaged under the oracle) must equal the sum of per-step reasoning and
    world-modeling divergences exactly, and must dominate the divergence of
    the answer marginals.
    """
    proc = joint.proc
    if model.horizon != proc.horizon:
        raise DomainError(
            f"model horizon {model.horizon} != oracle horizon {proc.horizon}"
        )
    p = joint.obs_tensor()
    h = proc.horizon
    m = model.joint_conditional()
    if m.shape != p.shape:
        raise DomainError(f"model alphabet mismatch: {m.shape} vs {p.shape}")

    reasoning_terms = [_masked_kl_terms(p, 2 * i, model.r_tables[i - 1]) for i in range(1, h + 1)]
    reasoning_terms.append(_masked_kl_terms(p, p.ndim - 1, model.r_tables[h]))
    wm_terms = [_masked_kl_terms(p, 2 * i + 1, model.o_tables[i - 1]) for i in range(1, h + 1)]

    # joint conditional divergence, conditioning on (q, o_0)
    cond_mass = p.sum(axis=tuple(range(2, p.ndim)), keepdims=True)
    mask = p > 0
    if np.any(mask & (m <= 0)):
        raise DomainError("model assigns zero probability on the oracle's support")
    joint_kl = float(
        (
            p[mask]
            * (
                np.log(p[mask])
                - np.log(np.broadcast_to(cond_mass, p.shape)[mask])
                - np.log(m[mask])
            )
        ).sum()
    )

    # answer-marginal divergence, same conditioning
    inner = tuple(range(2, p.ndim - 1))
    p_ans = p.sum(axis=inner)
    m_ans = m.sum(axis=tuple(range(2, m.ndim - 1)))
    cond2 = p_ans.sum(axis=-1, keepdims=True)
    mask2 = p_ans > 0
    if np.any(mask2 & (m_ans <= 0)):
        raise DomainError("model assigns zero probability to a supported answer")
    answer_kl = float(
        (
            p_ans[mask2]
            * (
                np.log(p_ans[mask2])
                - np.log(np.broadcast_to(cond2, p_ans.shape)[mask2])
                - np.log(m_ans[mask2])
            )
        ).sum()
    )

    total_terms = float(sum(reasoning_terms) + sum(wm_terms))
    equality_gap = abs(joint_kl - total_terms)
    projection_slack = joint_kl - answer_kl
    passed = equality_gap <= tol and projection_slack >= -tol
    return TheoremReport(
        name="error-decomposition",
        passed=passed,
        tolerance=tol,
        quantities={
            "joint_kl": joint_kl,
            "answer_kl": answer_kl,
            "reasoning_terms": reasoning_terms,
            "world_model_terms": wm_terms,
            "term_sum": total_terms,
        },
        gaps={"equality_gap": equality_gap, "projection_slack": projection_slack},
    )


def reasoning_uncertainty_gain(joint: CoTJoint, step: int) -> dict:
    """Uncertainty reduction that earlier observations buy for outcome ``step``.

    gain = I(o_1..o_{step-1} ; r_step | o_0, r_0..r_{step-1}) with r_0 the
    question and r_{H+1} the answer.  Also returns its two information
    bounds: the observations' information about the sliced states, and the
    outcome's information about sliced states plus earlier outcomes.
    """
    h = joint.proc.horizon
    if not 1 <= step <= h + 1:
        raise DomainError(f"step must be in [1, {h + 1}], got {step}")
    target = "a" if step == h + 1 else f"r{step}"
    obs = [f"o{j}" for j in range(1, step)]
    outcomes = ["q"] + [f"r{j}" for j in range(1, step)]
    given = ["o0"] + outcomes
    gain = joint.conditional_mi(obs, [target], given)
    states = [f"s{j}" for j in range(1, step)]
    bound_obs = joint.conditional_mi(obs, states) if obs else 0.0
    bound_outcome = joint.conditional_mi(
        [target], [f"s{j}" for j in range(step)] + outcomes
    )
    return {
        "step": step,
        "gain": gain,
        "bound_observations_states": bound_obs,
        "bound_outcome_history": bound_outcome,
    }


def check_theorem2(joint: CoTJoint, tol: float = EQUALITY_TOL) -> TheoremReport:
    """Certify nonnegativity and both upper bounds of every step's gain."""
    rows = [reasoning_uncertainty_gain(joint, i) for i in range(1, joint.proc.horizon + 2)]
    worst_neg = min(r["gain"] for r in rows)
    worst_bound = max(
        r["gain"] - min(r["bound_observations_states"], r["bound_outcome_history"])
        for r in rows
    )
    passed = worst_neg >= -GAIN_NONNEG_TOL and worst_bound <= tol
    return TheoremReport(
        name="uncertainty-reduction",
        passed=passed,
        tolerance=tol,
        quantities={
            "gains": [r["gain"] for r in rows],
            "bounds_observations_states": [r["bound_observations_states"] for r in rows],
            "bounds_outcome_history": [r["bound_outcome_history"] for r in rows],
        },
        gaps={"most_negative_gain": worst_neg, "worst_bound_excess": worst_bound},
    )


def check_corollary3(proc: OracleCoTProcess, tol: float = ZERO_GAIN_TOL) -> TheoremReport:
    """Certify zero gain under lossless observations and deterministic moves.

    Hypotheses are machine-verified first: every transition row must be a
    point mass, and at every step the realized observation map must be
    injective on the support of the sliced state.  A failed hypothesis
    raises PreconditionError naming it.
    """
    momdp = proc.momdp
    rowmax = momdp.transition.max(axis=2)
    bad = rowmax < 1.0 - 1e-12
    if bad.any():
        s, a = map(int, np.argwhere(bad)[0])
        raise PreconditionError(
            f"transitions are not deterministic: row (state {s}, action {a}) "
            f"has maximum probability {rowmax[s, a]:.6f}"
        )
    joint = enumerate_cot_joint(proc)
    cols = joint.columns()
    for i in range(proc.horizon + 1):
        support_mass = np.bincount(
            cols[f"s{i}"], weights=joint.flat, minlength=proc.sbar_count
        )
        support = np.nonzero(support_mass > 0)[0]
        omap = joint._observation_map(i)
        seen: dict[int, int] = {}
        for sbar in support:
            sym = int(omap[sbar])
            if sym in seen and seen[sym] != sbar:
                raise PreconditionError(
                    f"observation at step {i} is not injective on the reachable "
                    f"sliced states: states {seen[sym]} and {int(sbar)} both "
                    f"render to symbol {sym}"
                )
            seen[sym] = int(sbar)
    rows = [reasoning_uncertainty_gain(joint, i) for i in range(1, proc.horizon + 2)]
    worst = max(abs(r["gain"]) for r in rows)
    return TheoremReport(
        name="zero-gain-fully-observed",
        passed=worst <= tol,
        tolerance=tol,
        quantities={"gains": [r["gain"] for r in rows]},
        gaps={"largest_gain_magnitude": worst},
    )


# ---- ensemble suites ---------------------------------------------------


@dataclass
class SuiteResult:
    name: str
    passed: bool
    count: int
    rows: list[dict]
    worst: dict

    def to_jsonable(self) -> dict:
        return {
            "name": self.name,
            "passed": bool(self.passed),
            "count": self.count,
            "worst": {k: _jsonable(v) for k, v in self.worst.items()},
            "rows": [{k: _jsonable(v) for k, v in row.items()} for row in self.rows],
        }


def theorem1_suite(seed: int, count: int, tol: float = EQUALITY_TOL) -> SuiteResult:
    """Random ensemble check of the decomposition identity."""
    rows = []
    ok = True
    for i in range(count):
        oracle = random_cot_oracle(seed * 1_000_003 + i)
        joint = enumerate_cot_joint(oracle)
        model = random_factored_model(joint, seed * 2_000_003 + i)
        rep = check_theorem1(joint, model, tol)
        ok &= rep.passed
        rows.append(
            {
                "instance": i,
                "horizon": oracle.horizon,
                "equality_gap": rep.gaps["equality_gap"],
                "projection_slack": rep.gaps["projection_slack"],
                "joint_kl": rep.quantities["joint_kl"],
                "passed": rep.passed,
            }
        )
    worst = {
        "equality_gap": max(r["equality_gap"] for r in rows),
        "projection_slack": min(r["projection_slack"] for r in rows),
    }
    return SuiteResult("error-decomposition", ok, count, rows, worst)


def theorem2_suite(seed: int, count: int, tol: float = EQUALITY_TOL) -> SuiteResult:
    """Random ensemble check of gain nonnegativity and bounds."""
    rows = []
    ok = True
    for i in range(count):
        oracle = random_cot_oracle(seed * 3_000_017 + i)
        joint = enumerate_cot_joint(oracle)
        rep = check_theorem2(joint, tol)
        ok &= rep.passed
        rows.append(
            {
                "instance": i,
                "horizon": oracle.horizon,
                "most_negative_gain": rep.gaps["most_negative_gain"],
                "worst_bound_excess": rep.gaps["worst_bound_excess"],
                "max_gain": max(rep.quantities["gains"]),
                "passed": rep.passed,
            }
        )
    worst = {
        "most_negative_gain": min(r["most_negative_gain"] for r in rows),
        "worst_bound_excess": max(r["worst_bound_excess"] for r in rows),
    }
    return SuiteResult("uncertainty-reduction", ok, count, rows, worst)


def corollary3_suite(seed: int, count: int, tol: float = ZERO_GAIN_TOL) -> SuiteResult:
    """Deterministic fully-observable ensemble: every gain must vanish."""
    rows = []
    ok = True
    for i in range(count):
        oracle = deterministic_observable_oracle(seed * 5_000_011 + i)
        rep = check_corollary3(oracle, tol)
        ok &= rep.passed
        rows.append(
            {
                "instance": i,
                "horizon": oracle.horizon,
                "largest_gain_magnitude": rep.gaps["largest_gain_magnitude"],
                "passed": rep.passed,
            }
        )
    worst = {"largest_gain_magnitude": max(r["largest_gain_magnitude"] for r in rows)}
    return SuiteResult("zero-gain-fully-observed", ok, count, rows, worst)
