"""Finite multi-observable decision processes.

A process couples a finite MDP (states, actions, stochastic transition,
initial distribution) with an observation space factored into two stages:
a *slice* picks which aspect of the state is exposed, and a *render* maps
the sliced value to a concrete symbol in some modality.  Observing a state
is always ``render(slice(state))``.

Everything here is exact: probability tables are validated on construction
and trajectory joints are enumerated in full rather than sampled.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import CapacityError, DomainError

ROW_TOL = 1e-12

MODALITIES = ("verbal", "visual", "none")

#: Symbol emitted by renders of modality "none".
EMPTY_SYMBOL = None

DEFAULT_JOINT_CAP = 10**7


@dataclass(frozen=True)
class Render:
    """Second observation stage: sliced value -> symbol.

    ``table[v]`` is the symbol for sliced value ``v``.  Renders of modality
    "none" ignore their table and emit :data:`EMPTY_SYMBOL`.
    """

    modality: str
    table: tuple[int, ...]

    def __post_init__(self):
        if self.modality not in MODALITIES:
            raise DomainError(f"unknown modality {self.modality!r}")

    def apply(self, sliced_value: int):
        if self.modality == "none":
            return EMPTY_SYMBOL
        if not 0 <= sliced_value < len(self.table):
            raise DomainError(
                f"sliced value {sliced_value} outside render domain [0, {len(self.table)})"
            )
        return self.table[sliced_value]


@dataclass(frozen=True)
class Observation:
    modality: str
    symbol: int | None
    slice_index: int
    render_index: int


@dataclass
class DiscreteMOMDP:
    """Validated finite process with factored observations.

    transition has shape (S, A, S); initial has shape (S,).  Each slice is a
    length-S integer table whose codomain must be a contiguous range starting
    at zero (surjectivity), and every render table must cover the largest
    slice codomain.
    """

    transition: np.ndarray
    initial: np.ndarray
    slices: tuple[tuple[int, ...], ...]
    renders: tuple[Render, ...]
    name: str = "momdp"
    _slice_cards: tuple[int, ...] = field(init=False, repr=False)

    def __post_init__(self):
        self.transition = np.asarray(self.transition, dtype=float)
        self.initial = np.asarray(self.initial, dtype=float)
        if self.transition.ndim != 3 or self.transition.shape[0] != self.transition.shape[2]:
            raise DomainError(f"transition must have shape (S, A, S), got {self.transition.shape}")
        s, a, _ = self.transition.shape
        if self.initial.shape != (s,):
            raise DomainError(f"initial must have shape ({s},), got {self.initial.shape}")
        if np.any(self.transition < 0) or np.any(self.initial < 0):
            raise DomainError("probability tables must be nonnegative")
        rowsums = self.transition.sum(axis=2)
        bad = np.abs(rowsums - 1.0) > ROW_TOL
        if bad.any():
            i, j = np.argwhere(bad)[0]
            raise DomainError(
                f"transition row (state {i}, action {j}) sums to {rowsums[i, j]!r}, not 1"
            )
        if abs(self.initial.sum() - 1.0) > ROW_TOL:
            raise DomainError(f"initial distribution sums to {self.initial.sum()!r}, not 1")
        if not self.slices:
            raise DomainError("at least one slice is required")
        cards = []
        for k, tab in enumerate(self.slices):
            if len(tab) != s:
                raise DomainError(f"slice {k} has length {len(tab)}, expected {s}")
            vals = sorted(set(tab))
            if min(tab) < 0 or vals != list(range(len(vals))):
                raise DomainError(f"slice {k} is not surjective onto a 0-based range: {tab}")
            cards.append(max(tab) + 1)
        self._slice_cards = tuple(cards)
        max_card = max(cards)
        if not self.renders:
            raise DomainError("at least one render is required")
        for k, rend in enumerate(self.renders):
            if rend.modality != "none" and len(rend.table) < max_card:
                raise DomainError(
                    f"render {k} covers {len(rend.table)} sliced values, need {max_card}"
                )

    @property
    def n_states(self) -> int:
        return self.transition.shape[0]

    @property
    def n_actions(self) -> int:
        return self.transition.shape[1]

    @property
    def n_slices(self) -> int:
        return len(self.slices)

    @property
    def n_renders(self) -> int:
        return len(self.renders)

    def slice_cardinality(self, slice_index: int) -> int:
        return self._slice_cards[slice_index]

    def slice_value(self, state: int, slice_index: int) -> int:
        return self.slices[slice_index][state]

    def to_jsonable(self) -> dict:
        return {
            "name": self.name,
            "transition": self.transition.tolist(),
            "initial": self.initial.tolist(),
            "slices": [list(t) for t in self.slices],
            "renders": [{"modality": r.modality, "table": list(r.table)} for r in self.renders],
        }

    @classmethod
    def from_jsonable(cls, obj: dict) -> "DiscreteMOMDP":
        return cls(
            transition=np.asarray(obj["transition"], dtype=float),
            initial=np.asarray(obj["initial"], dtype=float),
            slices=tuple(tuple(t) for t in obj["slices"]),
            renders=tuple(Render(r["modality"], tuple(r["table"])) for r in obj["renders"]),
            name=obj.get("name", "momdp"),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_jsonable(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "DiscreteMOMDP":
        return cls.from_jsonable(json.loads(text))


def observe(momdp: DiscreteMOMDP, state: int, slice_index: int, render_index: int) -> Observation:
    """Two-stage observation of a state: render(slice(state))."""
    if not 0 <= state < momdp.n_states:
        raise DomainError(f"state {state} outside [0, {momdp.n_states})")
    if not 0 <= slice_index < momdp.n_slices:
        raise DomainError(f"slice index {slice_index} outside [0, {momdp.n_slices})")
    if not 0 <= render_index < momdp.n_renders:
        raise DomainError(f"render index {render_index} outside [0, {momdp.n_renders})")
    rend = momdp.renders[render_index]
    symbol = rend.apply(momdp.slice_value(state, slice_index))
    return Observation(rend.modality, symbol, slice_index, render_index)


def step_distribution(momdp: DiscreteMOMDP, state: int, action: int) -> np.ndarray:
    """Next-state distribution for (state, action), as a copy."""
    if not 0 <= state < momdp.n_states:
        raise DomainError(f"state {state} outside [0, {momdp.n_states})")
    if not 0 <= action < momdp.n_actions:
        raise DomainError(f"action {action} outside [0, {momdp.n_actions})")
    return momdp.transition[state, action].copy()


Policy = Callable[[tuple], Sequence[float]]


def uniform_policy(momdp: DiscreteMOMDP) -> Policy:
    probs = np.full(momdp.n_actions, 1.0 / momdp.n_actions)

    def policy(history: tuple) -> np.ndarray:
        return probs

    return policy


def enumerate_joint(
    momdp: DiscreteMOMDP,
    policy: Policy,
    horizon: int,
    channel: tuple[int, int] = (0, 0),
    cap: int = DEFAULT_JOINT_CAP,
) -> dict[tuple, float]:
    """Exact joint over trajectories (s_0, a_1, s_1, ..., a_H, s_H).

    The policy sees only the observation/action history, never raw states:
    its argument is (o_0, a_1, o_1, ..., a_{i-1}, o_{i-1}) where each o_j is
    the symbol observed through ``channel`` (a (slice, render) pair).

    Raises CapacityError before allocating anything if the trajectory count
    would exceed ``cap``.
    """
    if horizon < 0:
        raise DomainError("horizon must be >= 0")
    s, a = momdp.n_states, momdp.n_actions
    atoms = s * (a * s) ** horizon
    if atoms > cap:
        raise CapacityError(
            f"horizon {horizon} would enumerate {atoms} trajectories, cap is {cap}"
        )
    sl, rd = channel
    symbols = [observe(momdp, st, sl, rd).symbol for st in range(s)]
    joint: dict[tuple, float] = {}

    def recurse(traj: tuple, history: tuple, state: int, prob: float, depth: int):
        if depth == horizon:
            joint[traj] = joint.get(traj, 0.0) + prob
            return
        action_probs = np.asarray(policy(history), dtype=float)
        if action_probs.shape != (a,):
            raise DomainError(
                f"policy returned {action_probs.shape}, expected ({a},)"
            )
        for act in range(a):
            pa = float(action_probs[act])
            if pa == 0.0:
                continue
            row = momdp.transition[state, act]
            for nxt in range(s):
                pn = float(row[nxt])
                if pn == 0.0:
                    continue
                recurse(
                    traj + (act, nxt),
                    history + (act, symbols[nxt]),
                    nxt,
                    prob * pa * pn,
                    depth + 1,
                )

    for s0 in range(s):
        p0 = float(momdp.initial[s0])
        if p0 == 0.0:
            continue
        recurse((s0,), (symbols[s0],), s0, p0, 0)
    return joint


def random_momdp(
    seed: int,
    sizes: tuple[int, int, int, int, int],
    deterministic: bool = False,
) -> DiscreteMOMDP:
    """Reproducible random process.

    sizes = (n_states, n_actions, n_slices, n_renders, n_symbols).  Slice 0 is
    always the identity (fully informative) and render 0 is always the
    identity map over states, so every generated process has at least one
    lossless observation channel.  With ``deterministic=True`` every
    transition row is a point mass.
    """
    n_states, n_actions, n_slices, n_renders, n_symbols = sizes
    if min(sizes) < 1:
        raise DomainError(f"all sizes must be >= 1, got {sizes}")
    rng = np.random.default_rng(seed)
    if deterministic:
        transition = np.zeros((n_states, n_actions, n_states))
        targets = rng.integers(0, n_states, size=(n_states, n_actions))
        for i in range(n_states):
            for j in range(n_actions):
                transition[i, j, targets[i, j]] = 1.0
        initial = np.zeros(n_states)
        initial[int(rng.integers(0, n_states))] = 1.0
    else:
        transition = rng.gamma(1.0, 1.0, size=(n_states, n_actions, n_states))
        transition /= transition.sum(axis=2, keepdims=True)
        initial = rng.gamma(1.0, 1.0, size=n_states)
        initial /= initial.sum()

    slices: list[tuple[int, ...]] = [tuple(range(n_states))]
    for _ in range(n_slices - 1):
        card = int(rng.integers(1, n_states + 1))
        tab = list(range(card)) + [int(v) for v in rng.integers(0, card, size=n_states - card)]
        rng.shuffle(tab)
        slices.append(tuple(tab))

    renders: list[Render] = [Render("verbal", tuple(range(n_states)))]
    for _ in range(n_renders - 1):
        modality = "visual" if rng.integers(0, 2) else "verbal"
        table = tuple(int(v) for v in rng.integers(0, n_symbols, size=n_states))
        renders.append(Render(modality, table))

    return DiscreteMOMDP(
        transition=transition,
        initial=initial,
        slices=tuple(slices),
        renders=tuple(renders),
        name=f"random-{seed}",
    )


def empty_render() -> Render:
    """The designated uninformative render (modality "none")."""
    return Render("none", ())
