"""Multi-hop object manipulation puzzles.

A top-down scene of colored shapes on an 8x8 lattice undergoes a sequence
of edits described in text (recolors, reshapes, swaps, additions,
removals).  The question asks about the final scene: a count, the relative
direction between two objects, or the nearest object in a direction.
Every object is uniquely identified by its (color, shape) pair at the time
it is referenced; the generator maintains that invariant across edits.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, replace

from ..errors import DomainError, GenerationError
from . import TaskInstance

GRID = 8
COLORS = ("red", "green", "blue", "yellow", "purple", "orange", "cyan", "brown")
SHAPES = ("cube", "sphere", "cylinder")
SIDES = ("left", "right", "front", "behind")

SIDE_PHRASES = {
    "left": "directly to the left of",
    "right": "directly to the right of",
    "front": "directly in front of",
    "behind": "directly behind",
}

#: lattice deltas; x grows rightward, z grows away from the camera
SIDE_DELTAS = {"left": (-1, 0), "right": (1, 0), "front": (0, -1), "behind": (0, 1)}


@dataclass(frozen=True)
class Obj:
    color: str
    shape: str
    x: int
    z: int

    def descriptor(self) -> str:
        return f"the {self.color} {self.shape}"


Scene = tuple[Obj, ...]


def resolve(scene: Scene, ref: tuple[str, str]) -> Obj:
    color, shape = ref
    matches = [o for o in scene if o.color == color and o.shape == shape]
    if len(matches) != 1:
        raise DomainError(f"reference {color} {shape} matches {len(matches)} objects")
    return matches[0]


def _check_unique(scene: Scene) -> Scene:
    pairs = [(o.color, o.shape) for o in scene]
    if len(set(pairs)) != len(pairs):
        raise DomainError("duplicate color-shape pair")
    cells = [(o.x, o.z) for o in scene]
    if len(set(cells)) != len(cells):
        raise DomainError("two objects on one cell")
    return scene


def _occupied(scene: Scene) -> set[tuple[int, int]]:
    return {(o.x, o.z) for o in scene}


def _between_cell(scene: Scene, a: Obj, b: Obj) -> tuple[int, int]:
    """Free lattice cell nearest the midpoint; ties go to smaller x, then z."""
    mx, mz = (a.x + b.x) / 2.0, (a.z + b.z) / 2.0
    taken = _occupied(scene)
    best = None
    for x in range(GRID):
        for z in range(GRID):
            if (x, z) in taken:
                continue
            d = (x - mx) ** 2 + (z - mz) ** 2
            key = (d, x, z)
            if best is None or key < best:
                best = key
    if best is None:
        raise DomainError("no free cell for placement")
    return best[1], best[2]


def _side_cell(scene: Scene, ref: Obj, side: str) -> tuple[int, int]:
    dx, dz = SIDE_DELTAS[side]
    taken = _occupied(scene)
    x, z = ref.x + dx, ref.z + dz
    while 0 <= x < GRID and 0 <= z < GRID:
        if (x, z) not in taken:
            return x, z
        x, z = x + dx, z + dz
    raise DomainError(f"no free cell {side} of {ref.descriptor()}")


def apply_op(scene: Scene, op: tuple) -> Scene:
    kind = op[0]
    if kind == "recolor":
        _, ref, color = op
        obj = resolve(scene, ref)
        if color == obj.color:
            raise DomainError("recolor to the same color")
        out = tuple(replace(o, color=color) if o is obj else o for o in scene)
    elif kind == "reshape":
        _, ref, shape = op
        obj = resolve(scene, ref)
        if shape == obj.shape:
            raise DomainError("reshape to the same shape")
        out = tuple(replace(o, shape=shape) if o is obj else o for o in scene)
    elif kind == "swap_colors":
        _, ref_a, ref_b = op
        a, b = resolve(scene, ref_a), resolve(scene, ref_b)
        out = tuple(
            replace(o, color=b.color) if o is a
            else replace(o, color=a.color) if o is b
            else o
            for o in scene
        )
    elif kind == "swap_shapes":
        _, ref_a, ref_b = op
        a, b = resolve(scene, ref_a), resolve(scene, ref_b)
        out = tuple(
            replace(o, shape=b.shape) if o is a
            else replace(o, shape=a.shape) if o is b
            else o
            for o in scene
        )
    elif kind == "add":
        _, color, shape, placement = op
        if placement[0] == "between":
            a, b = resolve(scene, placement[1]), resolve(scene, placement[2])
            x, z = _between_cell(scene, a, b)
        else:
            ref = resolve(scene, placement[2])
            x, z = _side_cell(scene, ref, placement[1])
        out = scene + (Obj(color=color, shape=shape, x=x, z=z),)
    elif kind == "remove":
        _, ref = op
        obj = resolve(scene, ref)
        out = tuple(o for o in scene if o is not obj)
        if len(out) < 2:
            raise DomainError("scene would drop below two objects")
    else:
        raise DomainError(f"unknown op {kind!r}")
    return _check_unique(out)


def narrate_op(scene: Scene, op: tuple) -> str:
    """English description of an op against the scene it applies to."""
    kind = op[0]
    if kind == "recolor":
        obj = resolve(scene, op[1])
        return f"Change the color of {obj.descriptor()} to {op[2]}."
    if kind == "reshape":
        obj = resolve(scene, op[1])
        return f"Change the shape of {obj.descriptor()} into a {op[2]}."
    if kind == "swap_colors":
        a, b = resolve(scene, op[1]), resolve(scene, op[2])
        return f"Swap the colors of {a.descriptor()} and {b.descriptor()}."
    if kind == "swap_shapes":
        a, b = resolve(scene, op[1]), resolve(scene, op[2])
        return f"Swap the shapes of {a.descriptor()} and {b.descriptor()}."
    if kind == "add":
        _, color, shape, placement = op
        if placement[0] == "between":
            a, b = resolve(scene, placement[1]), resolve(scene, placement[2])
            where = f"between {a.descriptor()} and {b.descriptor()}"
        else:
            ref = resolve(scene, placement[2])
            where = f"{SIDE_PHRASES[placement[1]]} {ref.descriptor()}"
        return f"Add a {color} {shape} {where}."
    obj = resolve(scene, op[1])
    return f"Remove {obj.descriptor()}."


def direction_between(a: Obj, b: Obj) -> str:
    """Dominant-axis direction from a to b; raises on diagonal ties."""
    dx, dz = b.x - a.x, b.z - a.z
    if abs(dx) > abs(dz):
        return "right" if dx > 0 else "left"
    if abs(dz) > abs(dx):
        return "behind" if dz > 0 else "front"
    raise DomainError("diagonal pair has no dominant direction")


def nearest_in_direction(scene: Scene, ref: Obj, side: str) -> Obj | None:
    if side == "left":
        pool = [o for o in scene if o.x < ref.x]
    elif side == "right":
        pool = [o for o in scene if o.x > ref.x]
    elif side == "front":
        pool = [o for o in scene if o.z < ref.z]
    else:
        pool = [o for o in scene if o.z > ref.z]
    pool = [o for o in pool if o is not ref]
    if not pool:
        return None
    return min(pool, key=lambda o: ((o.x - ref.x) ** 2 + (o.z - ref.z) ** 2, o.x, o.z))


def _random_op(rng: random.Random, scene: Scene) -> tuple | None:
    kinds = ["recolor", "reshape", "swap_colors", "swap_shapes", "add", "remove"]
    kind = rng.choice(kinds)
    refs = [(o.color, o.shape) for o in scene]
    if kind == "recolor":
        ref = rng.choice(refs)
        return ("recolor", ref, rng.choice(COLORS))
    if kind == "reshape":
        ref = rng.choice(refs)
        return ("reshape", ref, rng.choice(SHAPES))
    if kind in ("swap_colors", "swap_shapes"):
        if len(refs) < 2:
            return None
        a, b = rng.sample(refs, 2)
        return (kind, a, b)
    if kind == "add":
        color, shape = rng.choice(COLORS), rng.choice(SHAPES)
        if len(refs) >= 2 and rng.random() < 0.5:
            a, b = rng.sample(refs, 2)
            placement = ("between", a, b)
        else:
            placement = ("side", rng.choice(SIDES), rng.choice(refs))
        return ("add", color, shape, placement)
    return ("remove", rng.choice(refs))


@dataclass
class MultihopBundle:
    instance: TaskInstance
    initial: Scene
    ops: list[tuple]
    narration: list[str]
    scenes: list[Scene]   # after each op
    options: list[str] | None


def generate(seed: int, split: str = "train") -> MultihopBundle:
    rng = random.Random(seed)
    for _ in range(300):
        n_objects = rng.randint(3, 6)
        pairs = rng.sample([(c, s) for c in COLORS for s in SHAPES], n_objects)
        cells = rng.sample([(x, z) for x in range(GRID) for z in range(GRID)], n_objects)
        scene: Scene = tuple(
            Obj(color=c, shape=s, x=x, z=z)
            for (c, s), (x, z) in zip(pairs, cells)
        )
        n_ops = 5 if split == "test" else rng.randint(2, 5)
        ops, narration, scenes = [], [], []
        cur = scene
        ok = True
        for _ in range(n_ops):
            for _ in range(50):
                op = _random_op(rng, cur)
                if op is None:
                    continue
                try:
                    nxt = apply_op(cur, op)
                except DomainError:
                    continue
                narration.append(narrate_op(cur, op))
                ops.append(op)
                cur = nxt
                scenes.append(cur)
                break
            else:
                ok = False
                break
        if not ok:
            continue

        final = cur
        qkind = rng.choice(("count", "direction", "neighbor"))
        options = None
        if qkind == "count":
            shape = rng.choice(SHAPES)
            count = sum(1 for o in final if o.shape == shape)
            qtext = f"How many {shape}s are in the final scene?"
            answer = count
            fmt = "'Answer: <integer>'"
        elif qkind == "direction":
            pair = None
            for _ in range(20):
                if len(final) < 2:
                    break
                a, b = rng.sample(list(final), 2)
                try:
                    side = direction_between(a, b)
                except DomainError:
                    continue
                pair = (a, b, side)
                break
            if pair is None:
                continue
            a, b, side = pair
            options = list(SIDES)
            answer = chr(ord("A") + options.index(side))
            listing = "  ".join(
                f"{chr(ord('A') + i)}) {opt}" for i, opt in enumerate(options)
            )
            qtext = (
                f"In the final scene, where is {b.descriptor()} relative to "
                f"{a.descriptor()}? Options: {listing}."
            )
            fmt = "'Answer: <letter>'"
        else:
            ref = rng.choice(list(final))
            side = rng.choice(SIDES)
            hit = nearest_in_direction(final, ref, side)
            names = sorted(o.descriptor()[4:] for o in final if o is not ref)
            options = names + ["none"]
            key = hit.descriptor()[4:] if hit is not None else "none"
            answer = chr(ord("A") + options.index(key))
            listing = "  ".join(
                f"{chr(ord('A') + i)}) {opt}" for i, opt in enumerate(options)
            )
            qtext = (
                f"In the final scene, which object is nearest to "
                f"{ref.descriptor()} on its {side} side ('front' meaning "
                f"closer to the camera, 'behind' farther away)? "
                f"Options: {listing}."
            )
            fmt = "'Answer: <letter>'"

        steps = " ".join(
            f"Step {i + 1}: {text}" for i, text in enumerate(narration)
        )
        question = (
            f"The image shows a top-down scene on an {GRID}x{GRID} grid: "
            f"cubes are drawn as squares, spheres as circles, cylinders as "
            f"triangles; the bottom row is nearest the camera and x grows "
            f"to the right. Apply the following changes in order. {steps} "
            f"{qtext} Give the final line of your reply as {fmt}."
        )
        instance = TaskInstance(
            id="",
            task="multihop",
            split=split,
            params={
                "n_objects": n_objects,
                "n_ops": n_ops,
                "question_kind": qkind,
                "options": options,
            },
            question=question,
            answer=answer,
            seed=seed,
        )
        return MultihopBundle(
            instance=instance,
            initial=scene,
            ops=ops,
            narration=narration,
            scenes=scenes,
            options=options,
        )
    raise GenerationError(f"no valid multihop instance for seed {seed} within 300 attempts")


def regenerate(instance: TaskInstance) -> MultihopBundle:
    return generate(instance.seed, split=instance.split)
