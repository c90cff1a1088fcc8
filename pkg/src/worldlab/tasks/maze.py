"""Maze navigation puzzles on a 5x5 perfect maze.

The maze is carved with iterative randomized depth-first search, so the
passage graph is a tree and the start-goal path is unique.  The primary
solver is breadth-first search; the oracle enumerates every simple path and
checks that exactly one exists.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass

from ..errors import ConsistencyError, DomainError
from . import TaskInstance

Cell = tuple[int, int]

MOVES = {"up": (-1, 0), "down": (1, 0), "left": (0, -1), "right": (0, 1)}


@dataclass(frozen=True)
class Maze:
    size: int
    # passages between orthogonally adjacent cells, stored as sorted pairs
    passages: frozenset[tuple[Cell, Cell]]
    start: Cell
    goal: Cell

    def open_between(self, a: Cell, b: Cell) -> bool:
        return (a, b) in self.passages or (b, a) in self.passages

    def neighbors(self, cell: Cell):
        r, c = cell
        for dr, dc in MOVES.values():
            nxt = (r + dr, c + dc)
            if 0 <= nxt[0] < self.size and 0 <= nxt[1] < self.size:
                if self.open_between(cell, nxt):
                    yield nxt


def carve_maze(rng: random.Random, size: int, start: Cell, goal: Cell) -> Maze:
    if size < 2:
        raise DomainError(f"maze size must be at least 2, got {size}")
    passages = set()
    visited = {start}
    stack = [start]
    while stack:
        r, c = stack[-1]
        options = []
        for dr, dc in MOVES.values():
            nxt = (r + dr, c + dc)
            if 0 <= nxt[0] < size and 0 <= nxt[1] < size and nxt not in visited:
                options.append(nxt)
        if not options:
            stack.pop()
            continue
        nxt = rng.choice(options)
        passages.add(tuple(sorted(((r, c), nxt))))
        visited.add(nxt)
        stack.append(nxt)
    return Maze(size=size, passages=frozenset(passages), start=start, goal=goal)


def solve_bfs(maze: Maze) -> list[Cell]:
    """Shortest path from start to goal, inclusive of both."""
    parent: dict[Cell, Cell | None] = {maze.start: None}
    queue = deque([maze.start])
    while queue:
        cell = queue.popleft()
        if cell == maze.goal:
            path = [cell]
            while parent[cell] is not None:
                cell = parent[cell]
                path.append(cell)
            return path[::-1]
        for nxt in maze.neighbors(cell):
            if nxt not in parent:
                parent[nxt] = cell
                queue.append(nxt)
    raise ConsistencyError("maze has no start-goal path; carving is broken")


def enumerate_simple_paths(maze: Maze, limit: int = 10_000) -> list[list[Cell]]:
    """All simple start-goal paths, found by exhaustive DFS.

    A perfect maze must yield exactly one; the cap only guards against a
    buggy maze with cycles.
    """
    found: list[list[Cell]] = []
    path = [maze.start]
    on_path = {maze.start}

    def walk(cell: Cell):
        if len(found) > limit:
            raise ConsistencyError("path explosion; maze is not a tree")
        if cell == maze.goal:
            found.append(list(path))
            return
        for nxt in maze.neighbors(cell):
            if nxt in on_path:
                continue
            path.append(nxt)
            on_path.add(nxt)
            walk(nxt)
            path.pop()
            on_path.remove(nxt)

    walk(maze.start)
    return found


@dataclass(frozen=True)
class PathState:
    """A maze with a walked path prefix; empty path means the bare maze."""

    maze: Maze
    path: tuple[Cell, ...]

    def head(self) -> Cell | None:
        return self.path[-1] if self.path else None


def trace_order(maze: Maze, start: Cell, marked: frozenset[Cell], head: Cell) -> tuple[Cell, ...]:
    """Order a set of path cells by walking the passage tree from start."""
    if head == start and len(marked) == 1:
        return (start,)
    seq = [start]
    seen = {start}
    while seq[-1] != head:
        options = [
            nxt for nxt in maze.neighbors(seq[-1])
            if nxt in marked and nxt not in seen
        ]
        if len(options) != 1:
            raise ConsistencyError("marked cells do not form a single path")
        seq.append(options[0])
        seen.add(options[0])
    return tuple(seq)


def path_moves(path: list[Cell]) -> list[str]:
    names = {v: k for k, v in MOVES.items()}
    out = []
    for (r0, c0), (r1, c1) in zip(path, path[1:]):
        out.append(names[(r1 - r0, c1 - c0)])
    return out


@dataclass
class MazeBundle:
    instance: TaskInstance
    maze: Maze
    path: list[Cell]


def generate(seed: int, split: str = "train", size: int = 5) -> MazeBundle:
    rng = random.Random(seed)
    cells = [(r, c) for r in range(size) for c in range(size)]
    while True:
        start, goal = rng.sample(cells, 2)
        maze = carve_maze(rng, size, start, goal)
        path = solve_bfs(maze)
        if len(path) >= 3:
            break
    question = (
        f"The image shows a {size}x{size} maze. The green dot marks the start "
        f"and the red ring marks the goal. Moving one cell at a time through "
        f"open passages, what is the minimum number of moves needed to reach "
        f"the goal from the start? Give the final line of your reply as "
        f"'Answer: <integer>'."
    )
    instance = TaskInstance(
        id="",
        task="maze",
        split=split,
        params={
            "size": size,
            "start": list(start),
            "goal": list(goal),
            "path_length": len(path) - 1,
        },
        question=question,
        answer=len(path) - 1,
        seed=seed,
    )
    return MazeBundle(instance=instance, maze=maze, path=path)


def regenerate(instance: TaskInstance) -> MazeBundle:
    return generate(instance.seed, split=instance.split,
                    size=instance.params["size"])
