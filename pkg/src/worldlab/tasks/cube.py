"""Multi-view cube structure puzzles.

A structure of colored unit cubes stands on an n x n base, described by a
height map and per-voxel colors (two colors).  The instance shows one
schematic isometric view and two orthographic views, then asks how many
cubes of a given color could be visible in a held-out view, across every
structure consistent with the given views.  The answer is the full set of
achievable counts.

The isometric projection is schematic: voxel (x, y, z) paints a 2-column by
3-row block on the canvas (one top-face row, two side-face rows), columns
along the x - y diagonal share a canvas column pair, and nearer voxels
overpaint farther ones.  Because canvas columns never mix diagonals, the
consistency search factorizes into independent per-diagonal searches plus a
global combination pass, which is what enumerate_consistent implements.
A brute-force route that enumerates every height map lives in the test
suite for n = 3.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from ..errors import CapacityError, ConsistencyError, GenerationError
from . import TaskInstance

COLOR_NAMES = ("yellow", "blue")
ORTH_VIEWS = ("front", "back", "left", "right", "top")
ISO_VIEWS = ("iso_fl", "iso_fr")
AUX = 2

FACE_TOP, FACE_LEFT, FACE_RIGHT = 0, 1, 2

NODE_BUDGET = 60_000
LEAF_BUDGET = 4_000


@dataclass
class CubeStack:
    base: int
    heights: tuple[tuple[int, ...], ...]       # indexed [y][x]
    colors: dict[tuple[int, int, int], int]    # (x, y, z) -> 0 or 1

    def height(self, x: int, y: int) -> int:
        return self.heights[y][x]


@dataclass(frozen=True)
class ViewMatrix:
    kind: str    # "orth" or "iso"
    view: str
    base: int
    cells: tuple[tuple[int | None, ...], ...]

    @property
    def rows(self) -> int:
        return len(self.cells)

    @property
    def cols(self) -> int:
        return len(self.cells[0])


def iso_code(color_id: int, face: int) -> int:
    return color_id * 3 + face


def iso_color(code: int) -> int:
    return code // 3


def iso_face(code: int) -> int:
    return code % 3


def mirror_x(stack: CubeStack) -> CubeStack:
    n = stack.base
    heights = tuple(
        tuple(stack.heights[y][n - 1 - x] for x in range(n)) for y in range(n)
    )
    colors = {
        (n - 1 - x, y, z): c for (x, y, z), c in stack.colors.items()
    }
    return CubeStack(base=n, heights=heights, colors=colors)


def _visible_voxel(heights, n: int, view: str, row: int, col: int):
    """Voxel shown at an orthographic view cell, or None."""
    if view == "top":
        y, x = n - 1 - row, col
        h = heights[y][x]
        return (x, y, h - 1) if h > 0 else None
    z = n - 1 - row
    if view == "front":
        x = col
        for y in range(n):
            if heights[y][x] > z:
                return (x, y, z)
    elif view == "back":
        x = n - 1 - col
        for y in range(n - 1, -1, -1):
            if heights[y][x] > z:
                return (x, y, z)
    elif view == "left":
        y = n - 1 - col
        for x in range(n):
            if heights[y][x] > z:
                return (x, y, z)
    elif view == "right":
        y = col
        for x in range(n - 1, -1, -1):
            if heights[y][x] > z:
                return (x, y, z)
    return None


def project_orth(stack: CubeStack, view: str) -> ViewMatrix:
    n = stack.base
    cells = []
    for row in range(n):
        line = []
        for col in range(n):
            vox = _visible_voxel(stack.heights, n, view, row, col)
            line.append(None if vox is None else stack.colors[vox])
        cells.append(tuple(line))
    return ViewMatrix(kind="orth", view=view, base=n, cells=tuple(cells))


def iso_canvas_shape(n: int) -> tuple[int, int]:
    return 4 * n - 1, 4 * n - 2


def _block_anchor(n: int, x: int, y: int, z: int) -> tuple[int, int]:
    """Top-left canvas cell of the voxel's 3x2 block."""
    r0 = 4 * (n - 1) - (x + y) - 2 * z
    c0 = 2 * (x - y + n - 1)
    return r0, c0


def _paint_iso(stack: CubeStack):
    n = stack.base
    rows, cols = iso_canvas_shape(n)
    cells = [[None] * cols for _ in range(rows)]
    voxels = [
        (x, y, z)
        for y in range(n)
        for x in range(n)
        for z in range(stack.heights[y][x])
    ]
    # farther along the view ray first; nearer voxels overpaint
    voxels.sort(key=lambda v: v[0] + v[1] - v[2], reverse=True)
    for x, y, z in voxels:
        color = stack.colors[(x, y, z)]
        r0, c0 = _block_anchor(n, x, y, z)
        cells[r0][c0] = iso_code(color, FACE_TOP)
        cells[r0][c0 + 1] = iso_code(color, FACE_TOP)
        for dr in (1, 2):
            cells[r0 + dr][c0] = iso_code(color, FACE_LEFT)
            cells[r0 + dr][c0 + 1] = iso_code(color, FACE_RIGHT)
    return tuple(tuple(row) for row in cells)


def _flip_iso_cells(cells):
    """Mirror an iso canvas horizontally, swapping the side-face codes."""
    flipped = []
    for row in cells:
        line = []
        for code in reversed(row):
            if code is None or iso_face(code) == FACE_TOP:
                line.append(code)
            else:
                face = FACE_RIGHT if iso_face(code) == FACE_LEFT else FACE_LEFT
                line.append(iso_code(iso_color(code), face))
        flipped.append(tuple(line))
    return tuple(flipped)


def project(stack: CubeStack, view: str) -> ViewMatrix:
    if view in ORTH_VIEWS:
        return project_orth(stack, view)
    if view == "iso_fl":
        return ViewMatrix(kind="iso", view=view, base=stack.base,
                          cells=_paint_iso(stack))
    if view == "iso_fr":
        cells = _flip_iso_cells(_paint_iso(mirror_x(stack)))
        return ViewMatrix(kind="iso", view=view, base=stack.base, cells=cells)
    raise ConsistencyError(f"unknown view {view!r}")


def _colflip(view: ViewMatrix) -> ViewMatrix:
    return ViewMatrix(
        kind=view.kind,
        view=view.view,
        base=view.base,
        cells=tuple(tuple(reversed(row)) for row in view.cells),
    )


_MIRROR_NAME = {"front": "front", "back": "back", "top": "top",
                "left": "right", "right": "left"}


def _column_render(n: int, d: int, j: int, h: int):
    """Rows painted by one diagonal position at height h, rendered alone.

    Yields (row, face_left, face_right, z_owner); both canvas columns of the
    pair are painted on every yielded row.
    """
    if h == 0:
        return
    base_row = 4 * (n - 1) - (2 * j + abs(d))
    yield base_row - 2 * (h - 1), FACE_TOP, FACE_TOP, h - 1
    for z in range(h):
        yield base_row - 2 * z + 1, FACE_LEFT, FACE_RIGHT, z
        yield base_row - 2 * z + 2, FACE_LEFT, FACE_RIGHT, z


class _Budget:
    def __init__(self, nodes: int, leaves: int):
        self.nodes = nodes
        self.leaves = leaves

    def spend_node(self):
        self.nodes -= 1
        if self.nodes < 0:
            raise CapacityError("consistency search exceeded its node budget")

    def spend_leaf(self):
        self.leaves -= 1
        if self.leaves < 0:
            raise CapacityError("consistency search exceeded its leaf budget")


def _chain_candidates(n, d, iso_cells, mins, caps, budget: _Budget):
    """All (heights, pins) for one diagonal consistent with its canvas pair."""
    c0 = 2 * (d + n - 1)
    length = n - abs(d)
    xs = [j + max(d, 0) for j in range(length)]
    ys = [j + max(-d, 0) for j in range(length)]
    given = [(row[c0], row[c0 + 1]) for row in iso_cells]
    needed = frozenset(
        r for r, (a, b) in enumerate(given) if a is not None or b is not None
    )
    results = []

    def walk(j, claimed, pins, heights):
        budget.spend_node()
        if j == length:
            if needed <= claimed:
                results.append((tuple(heights), dict(pins)))
            return
        x, y = xs[j], ys[j]
        for h in range(mins[y][x], caps[y][x] + 1):
            painted = set()
            new_pins = {}
            ok = True
            for row, fl, fr, z in _column_render(n, d, j, h):
                painted.add(row)
                if row in claimed:
                    continue
                gl, gr = given[row]
                if gl is None or gr is None:
                    ok = False
                    break
                if iso_face(gl) != fl or iso_face(gr) != fr:
                    ok = False
                    break
                color = iso_color(gl)
                if iso_color(gr) != color:
                    ok = False
                    break
                voxel = (x, y, z)
                pinned = new_pins.get(voxel, pins.get(voxel))
                if pinned is not None and pinned != color:
                    ok = False
                    break
                new_pins[voxel] = color
            if not ok:
                continue
            heights.append(h)
            pins.update(new_pins)
            walk(j + 1, claimed | painted, pins, heights)
            heights.pop()
            for key in new_pins:
                del pins[key]

    walk(0, frozenset(), {}, [])
    return results


def enumerate_consistent(
    n: int,
    iso_view: ViewMatrix,
    orth_views: dict[str, ViewMatrix],
    query_view: str,
    query_color: int,
    node_budget: int = NODE_BUDGET,
    leaf_budget: int = LEAF_BUDGET,
):
    """Achievable query-color counts over all structures matching the views.

    Returns (sorted count list, marked query view, number of structures).
    The marked view paints a cell with its color when every consistent
    structure shows that color there, aux when structures disagree, and
    leaves it empty when no structure occupies it.
    """
    mirrored = iso_view.view == "iso_fr"
    if mirrored:
        iso_cells = _flip_iso_cells(iso_view.cells)
        orth = {
            _MIRROR_NAME[name]: _colflip(view)
            for name, view in orth_views.items()
        }
        query = _MIRROR_NAME[query_view]
    else:
        iso_cells = iso_view.cells
        orth = dict(orth_views)
        query = query_view

    # per-cell height bounds and per-line witnesses from the flat views
    caps = [[n] * n for _ in range(n)]
    mins = [[0] * n for _ in range(n)]
    front_max: dict[int, int] = {}
    side_max: dict[int, int] = {}
    for name, view in orth.items():
        if name == "top":
            for row in range(n):
                for col in range(n):
                    y, x = n - 1 - row, col
                    if view.cells[row][col] is None:
                        caps[y][x] = 0
                    else:
                        mins[y][x] = max(mins[y][x], 1)
            continue
        for col in range(n):
            filled = sum(
                1 for row in range(n) if view.cells[row][col] is not None
            )
            if name in ("front", "back"):
                x = col if name == "front" else n - 1 - col
                for y in range(n):
                    caps[y][x] = min(caps[y][x], filled)
                prior = front_max.get(x)
                if prior is not None and prior != filled:
                    return [], None, 0
                front_max[x] = filled
            else:
                y = n - 1 - col if name == "left" else col
                for x in range(n):
                    caps[y][x] = min(caps[y][x], filled)
                prior = side_max.get(y)
                if prior is not None and prior != filled:
                    return [], None, 0
                side_max[y] = filled

    budget = _Budget(node_budget, leaf_budget)
    chains = {}
    product = 1
    for d in range(-(n - 1), n):
        chains[d] = _chain_candidates(n, d, iso_cells, mins, caps, budget)
        if not chains[d]:
            return [], None, 0
        product *= len(chains[d])
    if product > leaf_budget * 8:
        # the combination pass cannot finish under the leaf budget anyway
        raise CapacityError(
            f"{product} diagonal combinations exceed the search budget"
        )

    heights = [[0] * n for _ in range(n)]
    counts: set[int] = set()
    occupied_any = [[False] * n for _ in range(n)]
    occupied_always = [[True] * n for _ in range(n)]
    cell_colors: list[list[set]] = [[set() for _ in range(n)] for _ in range(n)]
    leaves = 0
    chain_order = list(range(-(n - 1), n))

    def leaf(all_pins):
        nonlocal leaves
        budget.spend_leaf()
        pins = dict(all_pins)
        for name, view in orth.items():
            for row in range(n):
                for col in range(n):
                    want = view.cells[row][col]
                    if want is None:
                        continue
                    vox = _visible_voxel(heights, n, name, row, col)
                    if vox is None:
                        return
                    pinned = pins.get(vox)
                    if pinned is not None and pinned != want:
                        return
                    pins[vox] = want
        base = 0
        free = 0
        seen = []
        for row in range(n):
            for col in range(n):
                vox = _visible_voxel(heights, n, query, row, col)
                seen.append(vox)
                if vox is None:
                    continue
                pinned = pins.get(vox)
                if pinned is None:
                    free += 1
                elif pinned == query_color:
                    base += 1
        counts.update(range(base, base + free + 1))
        leaves += 1
        i = 0
        for row in range(n):
            for col in range(n):
                vox = seen[i]
                i += 1
                if vox is None:
                    occupied_always[row][col] = False
                else:
                    occupied_any[row][col] = True
                    cell_colors[row][col].add(pins.get(vox, "free"))

    def place(ci, pins_stack):
        budget.spend_node()
        if ci == len(chain_order):
            merged = {}
            for p in pins_stack:
                merged.update(p)
            leaf(merged)
            return
        d = chain_order[ci]
        for cand_heights, cand_pins in chains[d]:
            for j, h in enumerate(cand_heights):
                x = j + max(d, 0)
                y = j + max(-d, 0)
                heights[y][x] = h
            if 0 <= d < n:
                x_done = d
                if x_done in front_max:
                    if max(heights[y][x_done] for y in range(n)) != front_max[x_done]:
                        continue
                y_done = n - 1 - d
                if y_done in side_max:
                    if max(heights[y_done][x] for x in range(n)) != side_max[y_done]:
                        continue
            pins_stack.append(cand_pins)
            place(ci + 1, pins_stack)
            pins_stack.pop()

    place(0, [])

    if leaves == 0:
        return [], None, 0

    marked = []
    for row in range(n):
        line = []
        for col in range(n):
            if not occupied_any[row][col]:
                line.append(None)
            elif occupied_always[row][col] and cell_colors[row][col] in ({0}, {1}):
                line.append(next(iter(cell_colors[row][col])))
            else:
                line.append(AUX)
        marked.append(tuple(line))
    marked_view = ViewMatrix(kind="orth", view=query, base=n,
                             cells=tuple(marked))
    if mirrored:
        marked_view = ViewMatrix(
            kind="orth",
            view=query_view,
            base=n,
            cells=_colflip(marked_view).cells,
        )
    return sorted(counts), marked_view, leaves


VIEW_LABELS = {
    "front": "the front view",
    "back": "the back view",
    "left": "the left view",
    "right": "the right view",
    "top": "the top view (front edge at the bottom)",
    "iso_fl": "an isometric view from the front-left",
    "iso_fr": "an isometric view from the front-right",
}


@dataclass
class CubeBundle:
    instance: TaskInstance
    stack: CubeStack
    given_views: list[ViewMatrix]    # iso first, then the two flat views
    query_view: str
    query_color: int
    marked: ViewMatrix
    counts: list[int]
    n_structures: int


def generate(seed: int, split: str = "train") -> CubeBundle:
    rng = random.Random(seed)
    n = 6 if split == "test" else rng.choice((3, 4, 5))
    # tall columns hide large regions and blow up the consistency search,
    # so larger bases lean toward shorter stacks
    weights = [5, 4, 3, 2, 1, 1, 1][: n + 1] if n >= 5 else [1] * (n + 1)
    levels = list(range(n + 1))
    for _ in range(300):
        heights = tuple(
            tuple(rng.choices(levels, weights=weights)[0] for _ in range(n))
            for _ in range(n)
        )
        if not any(any(row) for row in heights):
            continue
        colors = {
            (x, y, z): rng.randint(0, 1)
            for y in range(n)
            for x in range(n)
            for z in range(heights[y][x])
        }
        stack = CubeStack(base=n, heights=heights, colors=colors)
        iso_name = rng.choice(ISO_VIEWS)
        flats = rng.sample(ORTH_VIEWS, 2)
        query_view = rng.choice([v for v in ORTH_VIEWS if v not in flats])
        query_color = rng.randint(0, 1)
        iso_view = project(stack, iso_name)
        orth_views = {name: project(stack, name) for name in flats}
        try:
            counts, marked, leaves = enumerate_consistent(
                n, iso_view, orth_views, query_view, query_color
            )
        except CapacityError:
            continue
        if not counts:
            continue
        true_count = sum(
            1
            for row in range(n)
            for col in range(n)
            if (
                vox := _visible_voxel(heights, n, query_view, row, col)
            ) is not None
            and colors[vox] == query_color
        )
        if true_count not in counts:
            raise ConsistencyError(
                f"true structure count {true_count} missing from {counts}"
            )
        answer_mode = rng.choice(("membership", "equality"))
        color_name = COLOR_NAMES[query_color]
        given_text = (
            f"The first image shows {VIEW_LABELS[iso_name]}, the second "
            f"shows {VIEW_LABELS[flats[0]]}, and the third shows "
            f"{VIEW_LABELS[flats[1]]}."
        )
        if answer_mode == "equality":
            ask = (
                f"Across every structure consistent with all three views, "
                f"list every possible number of {color_name} cubes visible "
                f"in {VIEW_LABELS[query_view]}. Give the final line of your "
                f"reply as 'Answer: <comma-separated integers in increasing "
                f"order>'."
            )
        else:
            ask = (
                f"Considering every structure consistent with all three "
                f"views, give one possible number of {color_name} cubes "
                f"visible in {VIEW_LABELS[query_view]}. Give the final line "
                f"of your reply as 'Answer: <integer>'."
            )
        question = (
            f"A structure of stacked unit cubes (colors: yellow and blue) "
            f"stands on a {n}x{n} base. {given_text} A cube is visible in a "
            f"view if it shows at least one cell there. {ask}"
        )
        instance = TaskInstance(
            id="",
            task="cube",
            split=split,
            params={
                "base": n,
                "iso": iso_name,
                "flats": list(flats),
                "query_view": query_view,
                "query_color": color_name,
                "answer_mode": answer_mode,
                "n_structures": leaves,
            },
            question=question,
            answer=list(counts),
            seed=seed,
        )
        return CubeBundle(
            instance=instance,
            stack=stack,
            given_views=[iso_view, orth_views[flats[0]], orth_views[flats[1]]],
            query_view=query_view,
            query_color=query_color,
            marked=marked,
            counts=counts,
            n_structures=leaves,
        )
    raise GenerationError(f"no tractable cube instance for seed {seed} within 300 attempts")


def regenerate(instance: TaskInstance) -> CubeBundle:
    return generate(instance.seed, split=instance.split)
