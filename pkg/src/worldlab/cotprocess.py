"""Oracle reasoning processes over finite world models, enumerated exactly.

An oracle process couples a question, a chain of reasoning outcomes, and a
chain of sliced states: each reasoning outcome either transits the most
recent state through an implicit action (keeping its slice) or re-queries
that state under a new slice.  Reasoning kernels see states only through
slice outputs, so the conditional-independence structure needed by the
uncertainty-reduction bounds holds by construction.

Observations are deterministic renders of sliced states.  The full joint
over (question, sliced states, reasoning outcomes, answer) is built as one
dense numpy tensor; observation-level quantities are derived columns over
its atoms.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import CapacityError, DomainError
from .infotheory import neg_plogp
from .momdp import DiscreteMOMDP, Render, random_momdp

ROW_TOL = 1e-12

#: transit = apply an action to the latest state, keep its slice;
#: requery = keep the latest state, view it under a new slice.
ACTION_KINDS = ("transit", "requery")

DEFAULT_ATOM_CAP = 10**7


def _validate_rows(name: str, table: np.ndarray):
    if np.any(table < 0):
        raise DomainError(f"{name} has negative entries")
    sums = table.sum(axis=-1)
    if np.any(np.abs(sums - 1.0) > ROW_TOL):
        worst = float(np.abs(sums - 1.0).max())
        raise DomainError(f"{name} rows must sum to 1 (worst deviation {worst:.3e})")


@dataclass
class OracleCoTProcess:
    """A fully specified oracle reasoning process.

    reasoning_kernels[i-1] (for step i in 1..horizon) has axes
    (Q, Z0, R1, Z1, ..., R_{i-1}, Z_{i-1}, R_i): the question, the slice
    outputs of all earlier states, the earlier outcomes, and the new outcome.
    answer_kernel extends the same layout through step H and targets A.

    render_assignment[i] is the render id used to produce o_i from sliced
    state i; None renders the empty observation (implicit world modeling).
    """

    momdp: DiscreteMOMDP
    horizon: int
    q_dist: np.ndarray
    initial_slice: int
    action_map: tuple[tuple[str, int], ...]
    reasoning_kernels: tuple[np.ndarray, ...]
    answer_kernel: np.ndarray
    render_assignment: tuple[int | None, ...]
    name: str = "oracle"

    def __post_init__(self):
        self.q_dist = np.asarray(self.q_dist, dtype=float)
        if self.horizon < 1:
            raise DomainError("horizon must be >= 1")
        if abs(self.q_dist.sum() - 1.0) > ROW_TOL or np.any(self.q_dist < 0):
            raise DomainError("q_dist must be a probability vector")
        if not 0 <= self.initial_slice < self.momdp.n_slices:
            raise DomainError(f"initial slice {self.initial_slice} out of range")
        if len(self.render_assignment) != self.horizon + 1:
            raise DomainError(
                f"render_assignment must cover o_0..o_{self.horizon} "
                f"(got {len(self.render_assignment)} entries)"
            )
        for rid in self.render_assignment:
            if rid is not None and not 0 <= rid < self.momdp.n_renders:
                raise DomainError(f"render id {rid} out of range")
        for rv, (kind, arg) in enumerate(self.action_map):
            if kind not in ACTION_KINDS:
                raise DomainError(f"action_map[{rv}] has unknown kind {kind!r}")
            limit = self.momdp.n_actions if kind == "transit" else self.momdp.n_slices
            if not 0 <= arg < limit:
                raise DomainError(f"action_map[{rv}] argument {arg} out of range")
        if len(self.reasoning_kernels) != self.horizon:
            raise DomainError(
                f"need {self.horizon} reasoning kernels, got {len(self.reasoning_kernels)}"
            )
        z = self.z_card
        r = self.r_count
        q = self.q_count
        for i, ker in enumerate(self.reasoning_kernels, start=1):
            expect = (q,) + _context_shape(i, z, r) + (r,)
            if ker.shape != expect:
                raise DomainError(
                    f"reasoning kernel {i} has shape {ker.shape}, expected {expect}"
                )
            _validate_rows(f"reasoning kernel {i}", ker)
        expect = (q,) + _context_shape(self.horizon + 1, z, r) + (self.a_count,)
        if self.answer_kernel.shape != expect:
            raise DomainError(
                f"answer kernel has shape {self.answer_kernel.shape}, expected {expect}"
            )
        _validate_rows("answer kernel", self.answer_kernel)

    @property
    def q_count(self) -> int:
        return len(self.q_dist)

    @property
    def r_count(self) -> int:
        return len(self.action_map)

    @property
    def a_count(self) -> int:
        return self.answer_kernel.shape[-1]

    @property
    def z_card(self) -> int:
        """Slice-output alphabet size (largest slice codomain)."""
        return max(self.momdp.slice_cardinality(k) for k in range(self.momdp.n_slices))

    @property
    def sbar_count(self) -> int:
        """Sliced-state alphabet size: state index times slice index."""
        return self.momdp.n_states * self.momdp.n_slices


def _context_shape(step: int, z: int, r: int) -> tuple[int, ...]:
    """Kernel context axes for step i: z_0, r_1, z_1, ..., r_{i-1}, z_{i-1}."""
    shape: list[int] = [z]
    for _ in range(step - 1):
        shape += [r, z]
    return tuple(shape)


def _lift_kernel(kernel: np.ndarray, zmap: np.ndarray, n_z_axes: int) -> np.ndarray:
    """Replace each slice-output axis with a sliced-state axis via zmap."""
    out = kernel
    for j in range(n_z_axes):
        out = np.take(out, zmap, axis=1 + 2 * j)
    return out


class CoTJoint:
    """Exact joint of an oracle process, with derived observation columns.

    Axes of ``tensor``: (q, sbar_0, r_1, sbar_1, ..., r_H, sbar_H, a).
    Atom columns are integer arrays aligned with ``tensor.ravel()``; derived
    columns o_i apply the per-step render assignment.
    """

    def __init__(self, proc: OracleCoTProcess, cap: int = DEFAULT_ATOM_CAP):
        self.proc = proc
        momdp = proc.momdp
        h = proc.horizon
        n_s, n_k = momdp.n_states, momdp.n_slices
        m = proc.sbar_count
        shape = (proc.q_count, m) + (proc.r_count, m) * h + (proc.a_count,)
        atoms = int(np.prod([int(d) for d in shape], dtype=object))
        if atoms > cap:
            raise CapacityError(
                f"horizon {h} joint would hold {atoms} atoms, cap is {cap}"
            )
        self.shape = shape

        # slice output of each sliced state: sbar = state * n_slices + slice
        zmap = np.empty(m, dtype=np.int64)
        for s in range(n_s):
            for k in range(n_k):
                zmap[s * n_k + k] = momdp.slices[k][s]
        self.zmap = zmap

        # initial sliced state: momdp.initial on the fixed initial slice
        p0 = np.zeros(m)
        for s in range(n_s):
            p0[s * n_k + proc.initial_slice] = momdp.initial[s]

        # outcome factor W[sbar, r, sbar']
        w = np.zeros((m, proc.r_count, m))
        for sbar in range(m):
            s, phi = divmod(sbar, n_k)
            for rv, (kind, arg) in enumerate(proc.action_map):
                if kind == "transit":
                    for s2 in range(n_s):
                        w[sbar, rv, s2 * n_k + phi] = momdp.transition[s, arg, s2]
                else:
                    w[sbar, rv, s * n_k + arg] = 1.0

        joint = proc.q_dist[:, None] * p0[None, :]
        for i in range(1, h + 1):
            lifted = _lift_kernel(proc.reasoning_kernels[i - 1], zmap, i)
            joint = joint[..., None] * lifted
            joint = joint[..., None] * w
        lifted = _lift_kernel(proc.answer_kernel, zmap, h + 1)
        joint = joint[..., None] * lifted
        self.tensor = joint
        self.flat = joint.ravel()

        self._columns: dict[str, np.ndarray] | None = None
        self._obs_cache: tuple[np.ndarray, list[np.ndarray]] | None = None

    # ---- atom columns -------------------------------------------------

    def _axis_index(self, name: str) -> int:
        h = self.proc.horizon
        if name == "q":
            return 0
        if name == "a":
            return 2 * h + 2
        kind, idx = name[0], int(name[1:])
        if kind == "s" and 0 <= idx <= h:
            return 1 + 2 * idx
        if kind == "r" and 1 <= idx <= h:
            return 2 * idx
        raise DomainError(f"unknown joint variable {name!r}")

    def columns(self) -> dict[str, np.ndarray]:
        """Integer value per atom for every base and derived variable."""
        if self._columns is not None:
            return self._columns
        idx = np.unravel_index(np.arange(self.flat.size), self.shape)
        cols: dict[str, np.ndarray] = {}
        h = self.proc.horizon
        for name in ["q", "a"] + [f"r{i}" for i in range(1, h + 1)] + [
            f"s{i}" for i in range(h + 1)
        ]:
            cols[name] = idx[self._axis_index(name)].astype(np.int64)
        for i in range(h + 1):
            cols[f"z{i}"] = self.zmap[cols[f"s{i}"]]
            cols[f"o{i}"] = self._observation_map(i)[cols[f"s{i}"]]
        self._columns = cols
        return cols

    def _observation_map(self, step: int) -> np.ndarray:
        """Observation symbol per sliced state at a given step."""
        rid = self.proc.render_assignment[step]
        m = self.proc.sbar_count
        if rid is None or self.proc.momdp.renders[rid].modality == "none":
            return np.zeros(m, dtype=np.int64)
        table = np.asarray(self.proc.momdp.renders[rid].table, dtype=np.int64)
        return table[self.zmap]

    # ---- entropies over atom groups -----------------------------------

    def _codes(self, names: Sequence[str]) -> np.ndarray:
        cols = self.columns()
        codes = np.zeros(self.flat.size, dtype=np.int64)
        radix = 1
        for name in names:
            col = cols[name]
            card = int(col.max()) + 1
            if radix > (1 << 62) // max(card, 1):
                raise CapacityError("entropy group radix overflow")
            codes = codes * card + col
            radix *= card
        return codes

    def group_entropy(self, names: Sequence[str]) -> float:
        """H of the listed variables (empty list gives 0), in nats."""
        if not names:
            return 0.0
        dist = np.bincount(self._codes(names), weights=self.flat)
        return neg_plogp(dist)

    def conditional_mi(
        self, x: Sequence[str], y: Sequence[str], given: Sequence[str] = ()
    ) -> float:
        """I(x ; y | given) from grouped entropies."""
        x, y, g = list(x), list(y), list(given)
        if not x or not y:
            return 0.0
        return (
            self.group_entropy(x + g)
            + self.group_entropy(y + g)
            - self.group_entropy(g)
            - self.group_entropy(x + y + g)
        )

    # ---- observation-level joint --------------------------------------

    def obs_alphabets(self) -> list[np.ndarray]:
        """Sorted symbol alphabet of o_i for each step."""
        return [np.unique(self._observation_map(i)) for i in range(self.proc.horizon + 1)]

    def obs_tensor(self) -> np.ndarray:
        """Joint over (q, o_0, r_1, o_1, ..., r_H, o_H, a), observation level.

        Observation axes are dense-encoded against ``obs_alphabets``.
        """
        if self._obs_cache is not None:
            return self._obs_cache[0]
        cols = self.columns()
        h = self.proc.horizon
        alphabets = self.obs_alphabets()
        dense_obs = []
        for i in range(h + 1):
            alpha = alphabets[i]
            lookup = np.zeros(int(alpha.max()) + 1, dtype=np.int64)
            lookup[alpha] = np.arange(len(alpha))
            dense_obs.append(lookup[cols[f"o{i}"]])
        shape = [self.proc.q_count, len(alphabets[0])]
        order = [cols["q"], dense_obs[0]]
        for i in range(1, h + 1):
            shape += [self.proc.r_count, len(alphabets[i])]
            order += [cols[f"r{i}"], dense_obs[i]]
        shape.append(self.proc.a_count)
        order.append(cols["a"])
        codes = np.zeros(self.flat.size, dtype=np.int64)
        for dim, col in zip(shape, order):
            codes = codes * dim + col
        size = int(np.prod(shape))
        tensor = np.bincount(codes, weights=self.flat, minlength=size).reshape(shape)
        self._obs_cache = (tensor, alphabets)
        return tensor


def enumerate_cot_joint(proc: OracleCoTProcess, cap: int = DEFAULT_ATOM_CAP) -> CoTJoint:
    """Build the exact joint table of an oracle process."""
    return CoTJoint(proc, cap=cap)


# ---- factored observation-level models --------------------------------


@dataclass
class FactoredCoTModel:
    """Step-factored model over observation-level sequences.

    r_tables[i-1] predicts r_i from the prefix (q, o_0, ..., r_{i-1}, o_{i-1});
    the last entry predicts the answer.  o_tables[i-1] predicts o_i from the
    prefix extended with r_i.  Table axes follow the joint layout exactly.
    """

    horizon: int
    r_tables: tuple[np.ndarray, ...]
    o_tables: tuple[np.ndarray, ...]

    def __post_init__(self):
        if len(self.r_tables) != self.horizon + 1:
            raise DomainError(
                f"need {self.horizon + 1} outcome tables, got {len(self.r_tables)}"
            )
        if len(self.o_tables) != self.horizon:
            raise DomainError(
                f"need {self.horizon} observation tables, got {len(self.o_tables)}"
            )
        for i, tab in enumerate(self.r_tables, start=1):
            _validate_rows(f"outcome table {i}", np.asarray(tab))
        for i, tab in enumerate(self.o_tables, start=1):
            _validate_rows(f"observation table {i}", np.asarray(tab))

    def joint_conditional(self) -> np.ndarray:
        """p_model(r_1, o_1, ..., r_H, o_H, a | q, o_0) as one tensor."""
        joint = np.asarray(self.r_tables[0], dtype=float)
        for i in range(1, self.horizon + 1):
            joint = joint[..., None] * self.o_tables[i - 1]
            joint = joint[..., None] * self.r_tables[i]
        return joint


def random_factored_model(joint: CoTJoint, seed: int) -> FactoredCoTModel:
    """Strictly positive random model matching the oracle's alphabets."""
    rng = np.random.default_rng(seed)
    proc = joint.proc
    h = proc.horizon
    obs_cards = [len(a) for a in joint.obs_alphabets()]

    def dirichlet(shape):
        t = rng.gamma(1.0, 1.0, size=shape)
        return t / t.sum(axis=-1, keepdims=True)

    prefix: list[int] = [proc.q_count, obs_cards[0]]
    r_tables = []
    o_tables = []
    for i in range(1, h + 1):
        r_tables.append(dirichlet(tuple(prefix) + (proc.r_count,)))
        prefix.append(proc.r_count)
        o_tables.append(dirichlet(tuple(prefix) + (obs_cards[i],)))
        prefix.append(obs_cards[i])
    r_tables.append(dirichlet(tuple(prefix) + (proc.a_count,)))
    return FactoredCoTModel(h, tuple(r_tables), tuple(o_tables))


def oracle_factored_model(joint: CoTJoint) -> FactoredCoTModel:
    """The oracle's own observation-level conditionals, as a factored model.

    Prefixes with zero oracle mass get uniform rows; they never contribute
    to any expectation under the oracle.
    """
    p = joint.obs_tensor()
    h = joint.proc.horizon
    ndim = p.ndim

    def conditional(target_axis: int) -> np.ndarray:
        trailing = tuple(range(target_axis + 1, ndim))
        upto = p.sum(axis=trailing) if trailing else p
        prefix = upto.sum(axis=-1, keepdims=True)
        card = upto.shape[-1]
        with np.errstate(invalid="ignore", divide="ignore"):
            cond = np.where(prefix > 0, upto / np.where(prefix > 0, prefix, 1.0), 1.0 / card)
        return cond

    r_tables = [conditional(2 * i) for i in range(1, h + 1)]
    r_tables.append(conditional(ndim - 1))
    o_tables = [conditional(2 * i + 1) for i in range(1, h + 1)]
    return FactoredCoTModel(h, tuple(r_tables), tuple(o_tables))


# ---- builders ---------------------------------------------------------


def random_cot_oracle(
    seed: int,
    max_states: int = 4,
    max_actions: int = 3,
    max_horizon: int = 3,
    implicit: bool = False,
) -> OracleCoTProcess:
    """Reproducible random oracle process within the given size caps.

    With ``implicit=True`` every observation renders to the empty symbol.
    """
    rng = np.random.default_rng(seed)
    n_states = int(rng.integers(2, max_states + 1))
    n_actions = int(rng.integers(1, max_actions + 1))
    n_slices = int(rng.integers(1, 3))
    n_renders = int(rng.integers(1, 3))
    n_symbols = int(rng.integers(2, 5))
    horizon = int(rng.integers(1, max_horizon + 1))
    momdp = random_momdp(
        int(rng.integers(0, 2**63)),
        (n_states, n_actions, n_slices, n_renders, n_symbols),
    )
    q_count = int(rng.integers(2, 4))
    r_count = int(rng.integers(2, 4))
    a_count = int(rng.integers(2, 4))

    q_dist = rng.gamma(1.0, 1.0, size=q_count)
    q_dist /= q_dist.sum()
    action_map = []
    for _ in range(r_count):
        if rng.integers(0, 2):
            action_map.append(("transit", int(rng.integers(0, n_actions))))
        else:
            action_map.append(("requery", int(rng.integers(0, n_slices))))
    z = max(momdp.slice_cardinality(k) for k in range(n_slices))

    def dirichlet(shape):
        t = rng.gamma(1.0, 1.0, size=shape)
        return t / t.sum(axis=-1, keepdims=True)

    kernels = tuple(
        dirichlet((q_count,) + _context_shape(i, z, r_count) + (r_count,))
        for i in range(1, horizon + 1)
    )
    answer = dirichlet((q_count,) + _context_shape(horizon + 1, z, r_count) + (a_count,))
    if implicit:
        assignment = tuple([None] * (horizon + 1))
    else:
        assignment = tuple(
            int(rng.integers(0, momdp.n_renders)) for _ in range(horizon + 1)
        )
    return OracleCoTProcess(
        momdp=momdp,
        horizon=horizon,
        q_dist=q_dist,
        initial_slice=int(rng.integers(0, n_slices)),
        action_map=tuple(action_map),
        reasoning_kernels=kernels,
        answer_kernel=answer,
        render_assignment=assignment,
        name=f"oracle-{seed}",
    )


def deterministic_observable_oracle(
    seed: int,
    max_states: int = 4,
    max_actions: int = 3,
    max_horizon: int = 3,
) -> OracleCoTProcess:
    """Oracle with deterministic transitions and lossless observations.

    Built so both hypotheses of the zero-gain corollary hold: every
    transition row is a point mass and every step observes the state through
    the identity slice and identity render.
    """
    rng = np.random.default_rng(seed)
    n_states = int(rng.integers(2, max_states + 1))
    n_actions = int(rng.integers(1, max_actions + 1))
    horizon = int(rng.integers(1, max_horizon + 1))
    transition = np.zeros((n_states, n_actions, n_states))
    for s in range(n_states):
        for a in range(n_actions):
            transition[s, a, int(rng.integers(0, n_states))] = 1.0
    initial = rng.gamma(1.0, 1.0, size=n_states)
    initial /= initial.sum()
    momdp = DiscreteMOMDP(
        transition=transition,
        initial=initial,
        slices=(tuple(range(n_states)),),
        renders=(Render("verbal", tuple(range(n_states))),),
        name=f"det-{seed}",
    )
    q_count = int(rng.integers(2, 4))
    r_count = int(rng.integers(2, 4))
    a_count = int(rng.integers(2, 4))
    q_dist = rng.gamma(1.0, 1.0, size=q_count)
    q_dist /= q_dist.sum()
    action_map = []
    for _ in range(r_count):
        if rng.integers(0, 2):
            action_map.append(("transit", int(rng.integers(0, n_actions))))
        else:
            action_map.append(("requery", 0))

    def dirichlet(shape):
        t = rng.gamma(1.0, 1.0, size=shape)
        return t / t.sum(axis=-1, keepdims=True)

    kernels = tuple(
        dirichlet((q_count,) + _context_shape(i, n_states, r_count) + (r_count,))
        for i in range(1, horizon + 1)
    )
    answer = dirichlet(
        (q_count,) + _context_shape(horizon + 1, n_states, r_count) + (a_count,)
    )
    return OracleCoTProcess(
        momdp=momdp,
        horizon=horizon,
        q_dist=q_dist,
        initial_slice=0,
        action_map=tuple(action_map),
        reasoning_kernels=kernels,
        answer_kernel=answer,
        render_assignment=tuple([0] * (horizon + 1)),
        name=f"det-oracle-{seed}",
    )
