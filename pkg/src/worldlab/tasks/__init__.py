"""Puzzle task environments: exact generators, solvers, and oracles."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class TaskInstance:
    """One generated puzzle with its canonical answer.

    answer is an int, an uppercase choice letter, or a sorted list of ints;
    it is always recomputable from (task, params, seed) alone.
    """

    id: str
    task: str
    split: str
    params: dict
    question: str
    answer: int | str | list[int]
    seed: int
    input_meta: dict = field(default_factory=dict)


TASK_NAMES = ("paperfold", "multihop", "ball", "maze", "sokoban", "cube")

#: Default generation targets per task and split.
DATASET_TARGETS = {
    "paperfold": {"train": 2357, "test": 480},
    "multihop": {"train": 2000, "test": 480},
    "ball": {"train": 2254, "test": 1024},
    "maze": {"train": 8448, "test": 480},
    "sokoban": {"train": 7715, "test": 480},
    "cube": {"train": 2500, "test": 480},
}

#: Chain-of-thought formats each task supports.  Verbal world modeling is
#: omitted where symbolic state snapshots have no natural form.
TASK_FORMATS = {
    "paperfold": ("implicit", "verbal", "visual"),
    "multihop": ("implicit", "visual"),
    "ball": ("implicit", "visual"),
    "maze": ("implicit", "verbal", "visual"),
    "sokoban": ("implicit", "verbal", "visual"),
    "cube": ("implicit", "verbal", "visual"),
}

MASK_TOKENS = {
    "maze": "<point>[masked]</point>",
    "sokoban": "[masked]",
}


def generate_bundle(task: str, seed: int, split: str = "train", **opts):
    """Dispatch to a task module's generator; returns its bundle."""
    from . import ball, cube, maze, multihop, paperfold, sokoban

    modules = {
        "paperfold": paperfold,
        "multihop": multihop,
        "ball": ball,
        "maze": maze,
        "sokoban": sokoban,
        "cube": cube,
    }
    if task not in modules:
        from ..errors import DomainError

        raise DomainError(f"unknown task {task!r}; have {sorted(modules)}")
    return modules[task].generate(seed, split=split, **opts)
