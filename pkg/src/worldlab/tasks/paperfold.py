"""Paper folding puzzles.

A square sheet of grid paper is folded along interior grid lines, holes are
punched through every layer of the folded stack, and the question asks about
the hole pattern after unfolding.  Two independent solution routes exist:
forward layer tracking (each layer maps folded cells to original cells) and
backward hole replay (reflect punch positions through the fold log in
reverse).  They must always agree.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from ..errors import DomainError, GenerationError
from . import TaskInstance

SHAPES = ("circle", "triangle", "star", "diamond", "square")
SHAPE_LETTERS = {
    "circle": "O",
    "triangle": "T",
    "star": "S",
    "diamond": "D",
    "square": "Q",
}

# fold.axis "v" means the crease is a vertical line at column index `line`
# (folding left or right half); "h" creases at a row index.
DIRECTIONS = {"v": ("left_over", "right_over"), "h": ("top_over", "bottom_over")}


@dataclass(frozen=True)
class Fold:
    axis: str
    line: int
    direction: str

    def describe(self) -> str:
        side = {
            "left_over": "left edge over to the right",
            "right_over": "right edge over to the left",
            "top_over": "top edge down",
            "bottom_over": "bottom edge up",
        }[self.direction]
        kind = "vertical" if self.axis == "v" else "horizontal"
        return f"fold the {side} along the {kind} line at index {self.line}"


@dataclass
class FoldState:
    grid: int
    rows: int
    cols: int
    # bottom to top; each layer maps a folded cell to the original cell it
    # carries.  Layers are partial once fold extents stop matching.
    layers: list[dict[tuple[int, int], tuple[int, int]]]
    fold_log: list[Fold] = field(default_factory=list)
    punches: list[tuple[tuple[int, int], str]] = field(default_factory=list)

    def layer_count(self, cell: tuple[int, int]) -> int:
        return sum(1 for layer in self.layers if cell in layer)


def new_sheet(grid: int) -> FoldState:
    if grid < 2:
        raise DomainError(f"grid must be at least 2, got {grid}")
    base = {(r, c): (r, c) for r in range(grid) for c in range(grid)}
    return FoldState(grid=grid, rows=grid, cols=grid, layers=[base])


def _check_fold(state: FoldState, fold: Fold) -> None:
    if state.punches:
        raise DomainError("cannot fold after punching")
    if fold.axis not in DIRECTIONS or fold.direction not in DIRECTIONS[fold.axis]:
        raise DomainError(f"bad fold {fold!r}")
    extent = state.cols if fold.axis == "v" else state.rows
    if not 1 <= fold.line <= extent - 1:
        raise DomainError(f"fold line {fold.line} outside 1..{extent - 1}")
    flap = fold.line if fold.direction in ("left_over", "top_over") else extent - fold.line
    if flap > extent - flap:
        raise DomainError("flap would overhang the stationary part")


def apply_fold(state: FoldState, fold: Fold) -> FoldState:
    """Fold and return the new state; the input state is not modified."""
    _check_fold(state, fold)
    k = fold.line
    if fold.axis == "v":
        if fold.direction == "left_over":
            keep = lambda r, c: (r, c - k) if c >= k else None
            flap = lambda r, c: (r, k - 1 - c) if c < k else None
            new_rows, new_cols = state.rows, state.cols - k
        else:
            keep = lambda r, c: (r, c) if c < k else None
            flap = lambda r, c: (r, 2 * k - 1 - c) if c >= k else None
            new_rows, new_cols = state.rows, k
    else:
        if fold.direction == "top_over":
            keep = lambda r, c: (r - k, c) if r >= k else None
            flap = lambda r, c: (k - 1 - r, c) if r < k else None
            new_rows, new_cols = state.rows - k, state.cols
        else:
            keep = lambda r, c: (r, c) if r < k else None
            flap = lambda r, c: (2 * k - 1 - r, c) if r >= k else None
            new_rows, new_cols = k, state.cols

    stationary, flipped = [], []
    for layer in state.layers:
        stay = {}
        move = {}
        for (r, c), orig in layer.items():
            pos = keep(r, c)
            if pos is not None:
                stay[pos] = orig
            else:
                move[flap(r, c)] = orig
        if stay:
            stationary.append(stay)
        if move:
            flipped.append(move)
    flipped.reverse()
    return FoldState(
        grid=state.grid,
        rows=new_rows,
        cols=new_cols,
        layers=stationary + flipped,
        fold_log=state.fold_log + [fold],
        punches=list(state.punches),
    )


def punch(state: FoldState, cell: tuple[int, int], shape: str) -> FoldState:
    r, c = cell
    if not (0 <= r < state.rows and 0 <= c < state.cols):
        raise DomainError(f"punch {cell} outside folded extent {state.rows}x{state.cols}")
    if shape not in SHAPES:
        raise DomainError(f"unknown punch shape {shape!r}")
    out = FoldState(
        grid=state.grid,
        rows=state.rows,
        cols=state.cols,
        layers=[dict(layer) for layer in state.layers],
        fold_log=list(state.fold_log),
        punches=state.punches + [(cell, shape)],
    )
    return out


def unfold(state: FoldState) -> dict[tuple[int, int], tuple[str, ...]]:
    """Hole pattern on the original sheet, via forward layer tracking."""
    holes: dict[tuple[int, int], list[str]] = {}
    for cell, shape in state.punches:
        for layer in state.layers:
            if cell in layer:
                holes.setdefault(layer[cell], []).append(shape)
    return {cell: tuple(sorted(shapes)) for cell, shapes in holes.items()}


def _extent_log(grid: int, fold_log: list[Fold]) -> list[tuple[int, int]]:
    extents = [(grid, grid)]
    rows = cols = grid
    for fold in fold_log:
        k = fold.line
        if fold.axis == "v":
            cols = cols - k if fold.direction == "left_over" else k
        else:
            rows = rows - k if fold.direction == "top_over" else k
        extents.append((rows, cols))
    return extents


def _undo_fold(holes, fold: Fold, old_extent: tuple[int, int]):
    """Reflect hole positions back through one fold.

    A hole gains a mirrored twin only when its mirror image lands inside the
    pre-fold sheet; uneven folds leave part of the sheet single-layered.
    """
    out = []
    k = fold.line
    old_rows, old_cols = old_extent
    for (r, c), shape in holes:
        if fold.axis == "v":
            if fold.direction == "left_over":
                out.append(((r, c + k), shape))
                mirror = k - 1 - c
            else:
                out.append(((r, c), shape))
                mirror = 2 * k - 1 - c
            if 0 <= mirror < old_cols:
                out.append(((r, mirror), shape))
        else:
            if fold.direction == "top_over":
                out.append(((r + k, c), shape))
                mirror = k - 1 - r
            else:
                out.append(((r, c), shape))
                mirror = 2 * k - 1 - r
            if 0 <= mirror < old_rows:
                out.append(((mirror, c), shape))
    return out


def unfold_by_replay(
    grid: int,
    fold_log: list[Fold],
    punches: list[tuple[tuple[int, int], str]],
) -> dict[tuple[int, int], tuple[str, ...]]:
    """Independent route: mirror punch positions backwards through the log.

    Works because the bottom layer always spans the full folded extent, so
    every cell inside a flap region carries at least one layer.
    """
    extents = _extent_log(grid, fold_log)
    holes = list(punches)
    for depth in range(len(fold_log), 0, -1):
        holes = _undo_fold(holes, fold_log[depth - 1], extents[depth - 1])
    merged: dict[tuple[int, int], list[str]] = {}
    for cell, shape in holes:
        merged.setdefault(cell, []).append(shape)
    return {cell: tuple(sorted(shapes)) for cell, shapes in merged.items()}


def replay_stages(state: FoldState):
    """Intermediate sheets while unfolding, one per fold undone.

    Yields (rows, cols, holes, layer_counts) from the fully folded sheet to
    the flat one.  layer_counts maps cells to the number of paper layers at
    that stage, recomputed from the fold prefix.
    """
    extents = _extent_log(state.grid, state.fold_log)
    holes = list(state.punches)
    stages = []
    for depth in range(len(state.fold_log), -1, -1):
        rows, cols = extents[depth]
        prefix = new_sheet(state.grid)
        for fold in state.fold_log[:depth]:
            prefix = apply_fold(prefix, fold)
        counts = {
            (r, c): prefix.layer_count((r, c))
            for r in range(rows)
            for c in range(cols)
        }
        merged: dict[tuple[int, int], list[str]] = {}
        for cell, shape in holes:
            merged.setdefault(cell, []).append(shape)
        stages.append(
            (rows, cols, {c: tuple(sorted(s)) for c, s in merged.items()}, counts)
        )
        if depth > 0:
            holes = _undo_fold(holes, state.fold_log[depth - 1], extents[depth - 1])
    return stages


@dataclass(frozen=True)
class Snapshot:
    """A renderable sheet: its extent and the holes visible on it."""

    rows: int
    cols: int
    holes: tuple[tuple[tuple[int, int], str], ...]   # ((r, c), shape), sorted

    @classmethod
    def of(cls, rows: int, cols: int, holes: dict) -> "Snapshot":
        flat = []
        for cell, shapes in holes.items():
            if isinstance(shapes, str):
                flat.append((cell, shapes))
                continue
            if len(shapes) != 1:
                raise DomainError(f"cell {cell} holds {len(shapes)} holes")
            flat.append((cell, shapes[0]))
        return cls(rows=rows, cols=cols, holes=tuple(sorted(flat)))


@dataclass
class PaperfoldBundle:
    instance: TaskInstance
    state: FoldState
    fold_states: list[FoldState]   # after each fold, before punching
    pattern: dict[tuple[int, int], tuple[str, ...]]


def _random_fold(rng: random.Random, rows: int, cols: int) -> Fold | None:
    options = []
    if cols >= 2:
        options.append("v")
    if rows >= 2:
        options.append("h")
    if not options:
        return None
    axis = rng.choice(options)
    extent = cols if axis == "v" else rows
    direction = rng.choice(DIRECTIONS[axis])
    # keep the flap no larger than the stationary part
    if direction in ("left_over", "top_over"):
        lines = [k for k in range(1, extent) if k <= extent - k]
    else:
        lines = [k for k in range(1, extent) if extent - k <= k]
    if not lines:
        return None
    return Fold(axis=axis, line=rng.choice(lines), direction=direction)


def _question(kind, pattern, shapes, rng):
    total = sum(len(v) for v in pattern.values())
    counts = {s: 0 for s in SHAPES}
    for v in pattern.values():
        for s in v:
            counts[s] += 1
    if kind == "total":
        return "After fully unfolding the paper, how many holes are in it?", total
    if kind == "count_shape":
        shape = rng.choice(shapes)
        return (
            f"After fully unfolding the paper, how many {shape}-shaped holes are in it?",
            counts[shape],
        )
    a, b = rng.sample(shapes, 2)
    return (
        f"After fully unfolding the paper, what is the number of {a}-shaped "
        f"holes minus the number of {b}-shaped holes?",
        counts[a] - counts[b],
    )


def generate(seed: int, split: str = "train", index: int = 0) -> PaperfoldBundle:
    rng = random.Random(seed)
    if split == "test":
        grid, n_folds = 8, 4
    else:
        grid = rng.randint(3, 8)
        n_folds = rng.randint(1, 4)

    for _ in range(200):
        state = new_sheet(grid)
        fold_states = []
        ok = True
        for _ in range(n_folds):
            fold = _random_fold(rng, state.rows, state.cols)
            if fold is None:
                ok = False
                break
            state = apply_fold(state, fold)
            fold_states.append(state)
        if not ok:
            continue
        cells = [(r, c) for r in range(state.rows) for c in range(state.cols)]
        n_punch = rng.randint(1, min(3, len(cells)))
        punched = rng.sample(cells, n_punch)
        used_shapes = []
        for cell in punched:
            shape = rng.choice(SHAPES)
            used_shapes.append(shape)
            state = punch(state, cell, shape)

        pattern = unfold(state)
        kind = rng.choice(("total", "count_shape", "diff"))
        question_shapes = sorted(set(used_shapes)) if kind != "diff" else SHAPES
        qtext, answer = _question(kind, pattern, list(question_shapes), rng)

        fold_text = "; then ".join(f.describe() for f in state.fold_log)
        punch_text = ", ".join(
            f"a {shape} at row {r}, column {c}" for (r, c), shape in state.punches
        )
        question = (
            f"A {grid}x{grid} sheet of grid paper is folded as follows: "
            f"{fold_text}. Then holes are punched through every layer of the "
            f"folded stack: {punch_text} (rows count from the top, columns "
            f"from the left, both starting at 0). {qtext} "
            f"Give the final line of your reply as 'Answer: <integer>'."
        )
        instance = TaskInstance(
            id="",
            task="paperfold",
            split=split,
            params={
                "grid": grid,
                "folds": [
                    {"axis": f.axis, "line": f.line, "direction": f.direction}
                    for f in state.fold_log
                ],
                "punches": [
                    {"row": r, "col": c, "shape": s} for (r, c), s in state.punches
                ],
                "question_kind": kind,
            },
            question=question,
            answer=answer,
            seed=seed,
        )
        return PaperfoldBundle(
            instance=instance,
            state=state,
            fold_states=fold_states,
            pattern=pattern,
        )
    raise GenerationError(
        f"no valid paperfold instance for seed {seed} within 200 attempts"
    )


def regenerate(instance: TaskInstance) -> PaperfoldBundle:
    return generate(instance.seed, split=instance.split)
