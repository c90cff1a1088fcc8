"""Single-box sokoban puzzles.

The player pushes one box onto one target inside a walled square room.
The solver runs breadth-first search over (player, box) composite states
with a fixed expansion order, so the recovered move sequence is
deterministic.  The oracle recomputes a full distance map with no parent
bookkeeping and also validates the solution move by move.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass

from ..errors import ConsistencyError, GenerationError, UnsolvableError
from . import TaskInstance

Cell = tuple[int, int]

# expansion order fixed: up, down, left, right
MOVE_ORDER = ("up", "down", "left", "right")
MOVES = {"up": (-1, 0), "down": (1, 0), "left": (0, -1), "right": (0, 1)}


@dataclass(frozen=True)
class SokobanBoard:
    size: int
    walls: frozenset[Cell]
    target: Cell

    def free(self, cell: Cell) -> bool:
        r, c = cell
        return 0 <= r < self.size and 0 <= c < self.size and cell not in self.walls


@dataclass(frozen=True)
class SokobanState:
    player: Cell
    box: Cell


def step(board: SokobanBoard, state: SokobanState, move: str) -> SokobanState | None:
    """Apply one move; None when blocked."""
    dr, dc = MOVES[move]
    nxt = (state.player[0] + dr, state.player[1] + dc)
    if not board.free(nxt):
        return None
    if nxt == state.box:
        pushed = (nxt[0] + dr, nxt[1] + dc)
        if not board.free(pushed):
            return None
        return SokobanState(player=nxt, box=pushed)
    return SokobanState(player=nxt, box=state.box)


def solve_bfs(board: SokobanBoard, start: SokobanState) -> list[str]:
    """Minimum move sequence putting the box on the target."""
    if start.box == board.target:
        return []
    parent: dict[SokobanState, tuple[SokobanState, str] | None] = {start: None}
    queue = deque([start])
    while queue:
        state = queue.popleft()
        for move in MOVE_ORDER:
            nxt = step(board, state, move)
            if nxt is None or nxt in parent:
                continue
            parent[nxt] = (state, move)
            if nxt.box == board.target:
                moves = []
                cur = nxt
                while parent[cur] is not None:
                    cur, mv = parent[cur]
                    moves.append(mv)
                return moves[::-1]
            queue.append(nxt)
    raise UnsolvableError("no move sequence reaches the target")


def distance_map(board: SokobanBoard, start: SokobanState) -> dict[SokobanState, int]:
    """Plain BFS distances over every reachable composite state."""
    dist = {start: 0}
    queue = deque([start])
    while queue:
        state = queue.popleft()
        for move in MOVE_ORDER:
            nxt = step(board, state, move)
            if nxt is not None and nxt not in dist:
                dist[nxt] = dist[state] + 1
                queue.append(nxt)
    return dist


def replay(board: SokobanBoard, start: SokobanState, moves: list[str]) -> list[SokobanState]:
    """States visited while applying moves; raises if any move is blocked."""
    states = [start]
    for i, move in enumerate(moves):
        nxt = step(board, states[-1], move)
        if nxt is None:
            raise ConsistencyError(f"move {i} ({move}) is blocked")
        states.append(nxt)
    return states


def adjacent(a: Cell, b: Cell) -> bool:
    return abs(a[0] - b[0]) + abs(a[1] - b[1]) == 1


def key_indices(board: SokobanBoard, states: list[SokobanState], moves: list[str]) -> list[int]:
    """Indices of states kept as solution milestones.

    Milestones: the first time the player stands next to the box, the state
    before each push that starts a run of pushes in a new direction, and the
    final state.  Duplicates collapse.
    """
    picks = set()
    for i, state in enumerate(states):
        if adjacent(state.player, state.box):
            picks.add(i)
            break
    prev_push_dir = None
    for i, move in enumerate(moves):
        pushed = states[i + 1].box != states[i].box
        if pushed:
            if move != prev_push_dir:
                picks.add(i)
            prev_push_dir = move
        else:
            prev_push_dir = None
    picks.add(len(states) - 1)
    return sorted(picks)


@dataclass
class SokobanBundle:
    instance: TaskInstance
    board: SokobanBoard
    start: SokobanState
    moves: list[str]
    states: list[SokobanState]
    keys: list[int]


def _random_board(rng: random.Random, size: int):
    border = {
        (r, c)
        for r in range(size)
        for c in range(size)
        if r in (0, size - 1) or c in (0, size - 1)
    }
    interior = [
        (r, c) for r in range(1, size - 1) for c in range(1, size - 1)
    ]
    n_walls = rng.randint(0, len(interior) // 4)
    walls = set(rng.sample(interior, n_walls))
    open_cells = [c for c in interior if c not in walls]
    if len(open_cells) < 3:
        return None
    player, box, target = rng.sample(open_cells, 3)
    board = SokobanBoard(size=size, walls=frozenset(border | walls), target=target)
    return board, SokobanState(player=player, box=box)


def generate(seed: int, split: str = "train", size: int | None = None) -> SokobanBundle:
    rng = random.Random(seed)
    for _ in range(500):
        s = size if size is not None else rng.randint(6, 10)
        made = _random_board(rng, s)
        if made is None:
            continue
        board, start = made
        try:
            moves = solve_bfs(board, start)
        except UnsolvableError:
            continue
        if len(moves) < 4:
            continue
        states = replay(board, start, moves)
        keys = key_indices(board, states, moves)
        question = (
            f"The image shows a {board.size}x{board.size} sokoban room. The "
            f"blue circle is the player, the orange square is the box, and "
            f"the red ring is the target. The player moves one cell at a "
            f"time (up, down, left, right) and can push the box one cell by "
            f"walking into it, provided the cell behind the box is free. "
            f"What is the minimum number of moves needed to push the box "
            f"onto the target? Pushing counts as one move. Give the final "
            f"line of your reply as 'Answer: <integer>'."
        )
        instance = TaskInstance(
            id="",
            task="sokoban",
            split=split,
            params={
                "size": board.size,
                "size_arg": size,
                "player": list(start.player),
                "box": list(start.box),
                "target": list(board.target),
                "n_walls": len(board.walls) - (4 * board.size - 4),
                "solution_length": len(moves),
            },
            question=question,
            answer=len(moves),
            seed=seed,
        )
        return SokobanBundle(
            instance=instance,
            board=board,
            start=start,
            moves=moves,
            states=states,
            keys=keys,
        )
    raise GenerationError(f"no solvable sokoban for seed {seed} within 500 attempts")


def regenerate(instance: TaskInstance) -> SokobanBundle:
    return generate(instance.seed, split=instance.split,
                    size=instance.params["size_arg"])
