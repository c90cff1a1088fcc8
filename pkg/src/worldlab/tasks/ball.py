"""Ball bounce puzzles.

A ball starts inside a rectangular box, travels along a fixed integer
direction, reflects off the left, right, and bottom walls and off the solid
parts of the top edge, and eventually drops into one of the labeled holes
cut into the top edge.  The primary solver advances analytically from wall
event to wall event; the oracle is a fixed-step numeric integrator that
marches the ball forward in small increments and interpolates crossings.
Both report the hole label and the reflection count.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

import numpy as np

from ..errors import DegeneracyError, GenerationError, RunawayError
from . import TaskInstance

#: primitive direction vectors with a vertical component
DIRECTION_SET = tuple(
    (a, b)
    for a in (-2, -1, 0, 1, 2)
    for b in (-2, -1, 1, 2)
    if math.gcd(abs(a), abs(b)) == 1
)

MAX_REFLECTIONS = 64
EPS_SCALE = 1e-6
DT_SCALE = 1e-4
GENERATION_BUDGET = 10_000


@dataclass(frozen=True)
class BallScene:
    width: int
    height: int
    holes: tuple[tuple[int, int], ...]   # open intervals on the top edge
    start: tuple[int, int]               # cell holding the ball
    direction: tuple[int, int]           # +y points toward the top edge

    def initial_state(self) -> "BallState":
        return BallState(
            width=self.width,
            height=self.height,
            holes=self.holes,
            cell=self.start,
            direction=self.direction,
        )


@dataclass(frozen=True)
class BallState:
    """Scene geometry plus the ball's current cell and heading."""

    width: int
    height: int
    holes: tuple[tuple[int, int], ...]
    cell: tuple[int, int]
    direction: tuple[int, int]


@dataclass
class BallPath:
    events: list[tuple[float, float, str]]   # (x, y, wall or "hole")
    label: int
    n_reflections: int
    states: list[BallState]


def _quantize(scene: BallScene, x: float, y: float) -> tuple[int, int]:
    ix = min(max(int(math.floor(x)), 0), scene.width - 1)
    iy = min(max(int(math.floor(y)), 0), scene.height - 1)
    return ix, iy


def trace(scene: BallScene, max_reflections: int = MAX_REFLECTIONS) -> BallPath:
    """Analytic event-to-event simulation with degeneracy guards."""
    w, h = float(scene.width), float(scene.height)
    eps = EPS_SCALE * min(w, h)
    x, y = scene.start[0] + 0.5, scene.start[1] + 0.5
    heading = scene.direction
    vx, vy = float(heading[0]), float(heading[1])
    events: list[tuple[float, float, str]] = []
    states = [scene.initial_state()]
    reflections = 0
    while True:
        hits = []
        if vx > 0:
            hits.append(((w - x) / vx, "right"))
        elif vx < 0:
            hits.append((-x / vx, "left"))
        if vy > 0:
            hits.append(((h - y) / vy, "top"))
        elif vy < 0:
            hits.append((-y / vy, "bottom"))
        t, wall = min(hits)
        nx, ny = x + t * vx, y + t * vy
        if wall in ("left", "right") and (ny < eps or ny > h - eps):
            raise DegeneracyError(f"trajectory reaches a corner near ({nx:.6f}, {ny:.6f})")
        if wall in ("top", "bottom") and (nx < eps or nx > w - eps):
            raise DegeneracyError(f"trajectory reaches a corner near ({nx:.6f}, {ny:.6f})")
        if wall == "top":
            for a, b in scene.holes:
                if abs(nx - a) < eps or abs(nx - b) < eps:
                    raise DegeneracyError(
                        f"trajectory grazes a hole edge at x={nx:.6f}"
                    )
            for k, (a, b) in enumerate(scene.holes):
                if a + eps < nx < b - eps:
                    events.append((nx, ny, "hole"))
                    cell = (min(max(int(math.floor(nx)), a), b - 1), scene.height - 1)
                    states.append(
                        BallState(
                            width=scene.width,
                            height=scene.height,
                            holes=scene.holes,
                            cell=cell,
                            direction=heading,
                        )
                    )
                    return BallPath(
                        events=events,
                        label=k + 1,
                        n_reflections=reflections,
                        states=states,
                    )
        reflections += 1
        if reflections > max_reflections:
            raise RunawayError(
                f"more than {max_reflections} reflections without a hole"
            )
        events.append((nx, ny, wall))
        if wall in ("left", "right"):
            vx = -vx
            heading = (-heading[0], heading[1])
        else:
            vy = -vy
            heading = (heading[0], -heading[1])
        x, y = nx, ny
        states.append(
            BallState(
                width=scene.width,
                height=scene.height,
                holes=scene.holes,
                cell=_quantize(scene, x, y),
                direction=heading,
            )
        )


def trace_integrate(
    scene: BallScene,
    max_reflections: int = MAX_REFLECTIONS,
    chunk: int = 16384,
) -> tuple[int, int]:
    """Fixed-step numeric route; returns (hole label, reflection count)."""
    w, h = float(scene.width), float(scene.height)
    dt = DT_SCALE * min(w, h)
    norm = math.hypot(*scene.direction)
    ux, uy = scene.direction[0] / norm, scene.direction[1] / norm
    x, y = scene.start[0] + 0.5, scene.start[1] + 0.5
    reflections = 0
    budget = int(70.0 * (w + h) / dt)
    spent = 0
    ks = np.arange(1, chunk + 1)
    while spent < budget:
        xs = x + ux * dt * ks
        ys = y + uy * dt * ks
        outside = (xs < 0.0) | (xs > w) | (ys < 0.0) | (ys > h)
        idx = np.flatnonzero(outside)
        if idx.size == 0:
            x, y = float(xs[-1]), float(ys[-1])
            spent += chunk
            continue
        k = int(idx[0])
        px, py = (float(xs[k - 1]), float(ys[k - 1])) if k > 0 else (x, y)
        qx, qy = float(xs[k]), float(ys[k])
        crossings = []
        if qx < 0.0:
            crossings.append(((0.0 - px) / (qx - px), "left"))
        if qx > w:
            crossings.append(((w - px) / (qx - px), "right"))
        if qy < 0.0:
            crossings.append(((0.0 - py) / (qy - py), "bottom"))
        if qy > h:
            crossings.append(((h - py) / (qy - py), "top"))
        f, wall = min(crossings)
        cx, cy = px + f * (qx - px), py + f * (qy - py)
        if wall == "top":
            for j, (a, b) in enumerate(scene.holes):
                if a < cx < b:
                    return j + 1, reflections
        reflections += 1
        if reflections > max_reflections:
            raise RunawayError(
                f"more than {max_reflections} reflections without a hole"
            )
        if wall in ("left", "right"):
            ux = -ux
        else:
            uy = -uy
        x, y = cx, cy
        spent += k + 1
    raise RunawayError("step budget exhausted before reaching a hole")


def _sample_holes(rng: random.Random, width: int) -> tuple[tuple[int, int], ...] | None:
    k = rng.randint(4, 8)
    widths = [rng.randint(1, 3) for _ in range(k)]
    free = width - sum(widths) - (k - 1) - 2
    if free < 0:
        return None
    cuts = sorted(rng.randint(0, free) for _ in range(k))
    gaps = [cuts[0]] + [cuts[i] - cuts[i - 1] for i in range(1, k)]
    holes = []
    a = 1 + gaps[0]
    for i in range(k):
        if i > 0:
            a += gaps[i]
        holes.append((a, a + widths[i]))
        a = a + widths[i] + 1
    return tuple(holes)


@dataclass
class BallBundle:
    instance: TaskInstance
    scene: BallScene
    path: BallPath


def generate(seed: int, split: str = "train") -> BallBundle:
    rng = random.Random(seed)
    for _ in range(GENERATION_BUDGET):
        width = rng.randint(10, 20)
        height = rng.randint(10, 20)
        holes = _sample_holes(rng, width)
        if holes is None:
            continue
        start = (rng.randint(0, width - 1), rng.randint(0, height - 2))
        direction = rng.choice(DIRECTION_SET)
        scene = BallScene(
            width=width, height=height, holes=holes, start=start, direction=direction
        )
        try:
            path = trace(scene)
        except (DegeneracyError, RunawayError):
            continue
        if path.n_reflections < 1:
            continue
        k = len(holes)
        question = (
            f"The image shows a {width}x{height} box with {k} holes cut into "
            f"its top edge, numbered 1 through {k} from left to right. The "
            f"red dot is the ball; the legend below the box shows its "
            f"direction of travel as a green dot offset from a black dot. "
            f"The ball moves in a straight line and reflects off the walls "
            f"and off the solid parts of the top edge. Which hole does the "
            f"ball eventually fall into? Give the final line of your reply "
            f"as 'Answer: <integer>'."
        )
        instance = TaskInstance(
            id="",
            task="ball",
            split=split,
            params={
                "width": width,
                "height": height,
                "holes": [list(hole) for hole in holes],
                "start": list(start),
                "direction": list(direction),
                "n_reflections": path.n_reflections,
            },
            question=question,
            answer=path.label,
            seed=seed,
        )
        return BallBundle(instance=instance, scene=scene, path=path)
    raise GenerationError(
        f"no well-conditioned ball scene for seed {seed} within {GENERATION_BUDGET} attempts"
    )


def regenerate(instance: TaskInstance) -> BallBundle:
    return generate(instance.seed, split=instance.split)
