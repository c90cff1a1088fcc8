"""Task state rendering and exact decoding.

Each task's states draw onto a cell grid with palette colors and glyphs;
decode_state inverts render_state exactly, so dataset images double as
machine-checkable state snapshots.  The task name travels in PNG metadata
and selects the decoder.
"""

from __future__ import annotations

import numpy as np

from .errors import DecodeError, DomainError
from .raster import COLOR, CellCanvas, RasterImage, cell_px_for, classify_cell, glyph_mask
from .tasks import ball as ball_mod
from .tasks import cube as cube_mod
from .tasks import maze as maze_mod
from .tasks import multihop as multihop_mod
from .tasks import paperfold as paperfold_mod
from .tasks import sokoban as sokoban_mod

DEFAULT_RESOLUTION = 256

_MULTIHOP_GLYPH = {"cube": "square", "sphere": "circle", "cylinder": "triangle"}
_MULTIHOP_SHAPE = {v: k for k, v in _MULTIHOP_GLYPH.items()}

# cube view cell codes -> palette
_CUBE_ORTH_FILL = {0: COLOR["yellow"], 1: COLOR["blue"], cube_mod.AUX: COLOR["red"]}
_CUBE_ISO_FILL = {
    cube_mod.iso_code(0, cube_mod.FACE_TOP): COLOR["yellow"],
    cube_mod.iso_code(0, cube_mod.FACE_LEFT): COLOR["brown"],
    cube_mod.iso_code(0, cube_mod.FACE_RIGHT): COLOR["beige"],
    cube_mod.iso_code(1, cube_mod.FACE_TOP): COLOR["blue"],
    cube_mod.iso_code(1, cube_mod.FACE_LEFT): COLOR["navy"],
    cube_mod.iso_code(1, cube_mod.FACE_RIGHT): COLOR["cyan"],
}
_CUBE_ORTH_CODE = {v: k for k, v in _CUBE_ORTH_FILL.items()}
_CUBE_ISO_CODE = {v: k for k, v in _CUBE_ISO_FILL.items()}


def _mask_color(image: RasterImage, r: int, c: int, shape: str,
                background: int = COLOR["white"]) -> int | None:
    """Color of one glyph mask inside a cell, or None if absent or mixed."""
    cp = image.meta.get("cell")
    if not cp:
        raise DecodeError("image metadata lacks cell pitch")
    region = image.pixels[r * cp + 1 : (r + 1) * cp, c * cp + 1 : (c + 1) * cp]
    if region.shape != (cp - 1, cp - 1):
        raise DecodeError(f"cell ({r}, {c}) out of image bounds")
    values = np.unique(region[glyph_mask(shape, cp - 1)])
    if len(values) == 1 and int(values[0]) != background:
        return int(values[0])
    return None


def _edge_is_wall(image: RasterImage, r: int, c: int, side: str) -> bool:
    """Probe the midpoint of a cell edge for a wall stroke."""
    cp = image.meta["cell"]
    mid_y = r * cp + cp // 2
    mid_x = c * cp + cp // 2
    if side == "U":
        y, x = r * cp, mid_x
    elif side == "D":
        y, x = (r + 1) * cp, mid_x
    elif side == "L":
        y, x = mid_y, c * cp
    else:
        y, x = mid_y, (c + 1) * cp
    return int(image.pixels[y, x]) == COLOR["black"]


# ---------------------------------------------------------------- paperfold

def _render_paperfold(snap: paperfold_mod.Snapshot, resolution: int) -> RasterImage:
    cp = cell_px_for(resolution, snap.rows, snap.cols)
    canvas = CellCanvas(snap.rows, snap.cols, cp, meta={"task": "paperfold"})
    for r in range(snap.rows):
        for c in range(snap.cols):
            canvas.fill_cell(r, c, COLOR["beige"])
    canvas.grid_lines()
    for (r, c), shape in snap.holes:
        canvas.glyph(r, c, shape, COLOR["black"])
    return canvas.image()


def _decode_paperfold(image: RasterImage) -> paperfold_mod.Snapshot:
    rows, cols = image.meta["rows"], image.meta["cols"]
    holes = []
    for r in range(rows):
        for c in range(cols):
            kind, color = classify_cell(image, r, c, background=COLOR["beige"])
            if kind == "empty":
                continue
            if kind not in paperfold_mod.SHAPES or color != COLOR["black"]:
                raise DecodeError(f"unexpected mark {kind!r} at ({r}, {c})")
            holes.append(((r, c), kind))
    return paperfold_mod.Snapshot(rows=rows, cols=cols, holes=tuple(sorted(holes)))


# ---------------------------------------------------------------- multihop

def _render_multihop(scene, resolution: int) -> RasterImage:
    n = multihop_mod.GRID
    cp = cell_px_for(resolution, n, n)
    canvas = CellCanvas(n, n, cp, meta={"task": "multihop"})
    canvas.grid_lines()
    for obj in scene:
        r, c = n - 1 - obj.z, obj.x
        canvas.glyph(r, c, _MULTIHOP_GLYPH[obj.shape], COLOR[obj.color])
    return canvas.image()


def _decode_multihop(image: RasterImage):
    n = multihop_mod.GRID
    color_names = {COLOR[name]: name for name in multihop_mod.COLORS}
    objs = []
    for r in range(n):
        for c in range(n):
            kind, color = classify_cell(image, r, c)
            if kind == "empty":
                continue
            if kind not in _MULTIHOP_SHAPE or color not in color_names:
                raise DecodeError(f"unexpected mark {kind!r} at ({r}, {c})")
            objs.append(
                multihop_mod.Obj(
                    color=color_names[color],
                    shape=_MULTIHOP_SHAPE[kind],
                    x=c,
                    z=n - 1 - r,
                )
            )
    return tuple(sorted(objs, key=lambda o: (o.x, o.z)))


# ---------------------------------------------------------------- ball

_LEGEND_ROWS = 5


def _render_ball(state: ball_mod.BallState, resolution: int) -> RasterImage:
    w, h = state.width, state.height
    rows = h + 1 + _LEGEND_ROWS
    cp = cell_px_for(resolution, rows, w)
    canvas = CellCanvas(rows, w, cp, meta={"task": "ball", "w": w, "h": h})
    canvas.grid_lines()

    def in_hole(c: int) -> bool:
        return any(a <= c and c + 1 <= b for a, b in state.holes)

    for c in range(w):
        if not in_hole(c):
            canvas.edge_line(0, c, "U", COLOR["black"])
        canvas.edge_line(h - 1, c, "D", COLOR["black"])
    for r in range(h):
        canvas.edge_line(r, 0, "L", COLOR["black"])
        canvas.edge_line(r, w - 1, "R", COLOR["black"])

    ix, iy = state.cell
    canvas.glyph(h - 1 - iy, ix, "dot", COLOR["red"])

    anchor_r, anchor_c = h + 3, 2
    dx, dy = state.direction
    canvas.glyph(anchor_r, anchor_c, "dot", COLOR["black"])
    canvas.glyph(anchor_r - dy, anchor_c + dx, "dot", COLOR["green"])
    return canvas.image()


def _decode_ball(image: RasterImage) -> ball_mod.BallState:
    w, h = image.meta["w"], image.meta["h"]
    open_cols = [
        c for c in range(w) if not _edge_is_wall(image, 0, c, "U")
    ]
    holes = []
    for c in open_cols:
        if holes and holes[-1][1] == c:
            holes[-1] = (holes[-1][0], c + 1)
        else:
            holes.append((c, c + 1))
    cell = None
    for r in range(h):
        for c in range(w):
            if _mask_color(image, r, c, "dot") == COLOR["red"]:
                if cell is not None:
                    raise DecodeError("two ball marks")
                cell = (c, h - 1 - r)
    if cell is None:
        raise DecodeError("no ball mark")
    anchor_r, anchor_c = h + 3, 2
    direction = None
    for r in range(h + 1, h + 1 + _LEGEND_ROWS):
        for c in range(_LEGEND_ROWS):
            if _mask_color(image, r, c, "dot") == COLOR["green"]:
                direction = (c - anchor_c, anchor_r - r)
    if direction is None:
        raise DecodeError("no direction mark")
    return ball_mod.BallState(
        width=w,
        height=h,
        holes=tuple(tuple(hole) for hole in holes),
        cell=cell,
        direction=direction,
    )


# ---------------------------------------------------------------- maze

def _render_maze(state: maze_mod.PathState, resolution: int) -> RasterImage:
    mz = state.maze
    n = mz.size
    cp = cell_px_for(resolution, n, n)
    canvas = CellCanvas(n, n, cp, meta={"task": "maze"})
    canvas.grid_lines()
    for r in range(n):
        canvas.edge_line(r, 0, "L", COLOR["black"])
        canvas.edge_line(r, n - 1, "R", COLOR["black"])
    for c in range(n):
        canvas.edge_line(0, c, "U", COLOR["black"])
        canvas.edge_line(n - 1, c, "D", COLOR["black"])
    for r in range(n):
        for c in range(n):
            if c + 1 < n and not mz.open_between((r, c), (r, c + 1)):
                canvas.edge_line(r, c, "R", COLOR["black"])
            if r + 1 < n and not mz.open_between((r, c), (r + 1, c)):
                canvas.edge_line(r, c, "D", COLOR["black"])

    # walked path shows as points joined by lines; lines stay inside the
    # two linked cells, so the decoder can ignore them and probe glyph masks
    for (r1, c1), (r2, c2) in zip(state.path, state.path[1:]):
        canvas.link_cells(r1, c1, r2, c2, COLOR["blue"])
    dots: dict[tuple[int, int], int] = {}
    for cell in state.path:
        dots[cell] = COLOR["blue"]
    if state.path:
        dots[state.path[-1]] = COLOR["magenta"]
    if not state.path or state.path[-1] != mz.start:
        dots[mz.start] = COLOR["green"]
    for (r, c), color in dots.items():
        canvas.glyph(r, c, "dot", color)
    gr, gc = mz.goal
    canvas.glyph(gr, gc, "ring", COLOR["red"])
    return canvas.image()


def _decode_maze(image: RasterImage) -> maze_mod.PathState:
    n = image.meta["rows"]
    passages = set()
    for r in range(n):
        for c in range(n):
            if c + 1 < n and not _edge_is_wall(image, r, c, "R"):
                passages.add(((r, c), (r, c + 1)))
            if r + 1 < n and not _edge_is_wall(image, r, c, "D"):
                passages.add(((r, c), (r + 1, c)))
    start = goal = head = None
    blues = set()
    for r in range(n):
        for c in range(n):
            if _mask_color(image, r, c, "ring") == COLOR["red"]:
                goal = (r, c)
            dot = _mask_color(image, r, c, "dot")
            if dot == COLOR["green"]:
                start = (r, c)
            elif dot == COLOR["magenta"]:
                head = (r, c)
            elif dot == COLOR["blue"]:
                blues.add((r, c))
    if goal is None:
        raise DecodeError("no goal mark")
    if start is None and head is None:
        raise DecodeError("no start mark")
    if start is None:
        start = head
    mz = maze_mod.Maze(
        size=n, passages=frozenset(passages), start=start, goal=goal
    )
    if head is None:
        if blues:
            raise DecodeError("path cells without a head mark")
        return maze_mod.PathState(maze=mz, path=())
    marked = frozenset(blues | {start, head})
    path = maze_mod.trace_order(mz, start, marked, head)
    if set(path) != set(marked):
        raise DecodeError("marked cells are not a single walked path")
    return maze_mod.PathState(maze=mz, path=path)


# ---------------------------------------------------------------- sokoban

def _render_sokoban(state, resolution: int) -> RasterImage:
    board, pos = state
    n = board.size
    cp = cell_px_for(resolution, n, n)
    canvas = CellCanvas(n, n, cp, meta={"task": "sokoban"})
    canvas.grid_lines()
    for r, c in sorted(board.walls):
        canvas.fill_cell(r, c, COLOR["black"])
    tr, tc = board.target
    if pos.box == board.target:
        canvas.glyph(tr, tc, "square", COLOR["green"])
    else:
        canvas.glyph(tr, tc, "ring", COLOR["red"])
        br, bc = pos.box
        canvas.glyph(br, bc, "square", COLOR["orange"])
    pr, pc = pos.player
    if pos.player == board.target and pos.box != board.target:
        canvas.glyph(pr, pc, "circle", COLOR["purple"])
    else:
        canvas.glyph(pr, pc, "circle", COLOR["blue"])
    return canvas.image()


def _decode_sokoban(image: RasterImage):
    n = image.meta["rows"]
    walls = set()
    target = box = player = None
    for r in range(n):
        for c in range(n):
            kind, color = classify_cell(image, r, c)
            if kind == "fill" and color == COLOR["black"]:
                walls.add((r, c))
            elif kind == "square" and color == COLOR["orange"]:
                box = (r, c)
            elif kind == "square" and color == COLOR["green"]:
                target = box = (r, c)
            elif kind == "circle" and color == COLOR["blue"]:
                player = (r, c)
            elif kind == "circle" and color == COLOR["purple"]:
                target = player = (r, c)
            elif kind == "ring" and color == COLOR["red"]:
                target = (r, c)
            elif kind != "empty":
                raise DecodeError(f"unexpected mark {kind!r} at ({r}, {c})")
    if target is None or box is None or player is None:
        raise DecodeError("missing sokoban pieces")
    board = sokoban_mod.SokobanBoard(
        size=n, walls=frozenset(walls), target=target
    )
    return board, sokoban_mod.SokobanState(player=player, box=box)


# ---------------------------------------------------------------- cube

def _render_cube(view: cube_mod.ViewMatrix, resolution: int) -> RasterImage:
    fills = _CUBE_ORTH_FILL if view.kind == "orth" else _CUBE_ISO_FILL
    cp = cell_px_for(resolution, view.rows, view.cols)
    canvas = CellCanvas(
        view.rows,
        view.cols,
        cp,
        meta={"task": "cube", "kind": view.kind, "view": view.view,
              "base": view.base},
    )
    canvas.grid_lines()
    for r in range(view.rows):
        for c in range(view.cols):
            code = view.cells[r][c]
            if code is not None:
                canvas.fill_cell(r, c, fills[code])
    return canvas.image()


def _decode_cube(image: RasterImage) -> cube_mod.ViewMatrix:
    kind = image.meta["kind"]
    codes = _CUBE_ORTH_CODE if kind == "orth" else _CUBE_ISO_CODE
    rows, cols = image.meta["rows"], image.meta["cols"]
    cells = []
    for r in range(rows):
        line = []
        for c in range(cols):
            mark, color = classify_cell(image, r, c)
            if mark == "empty":
                line.append(None)
            elif mark == "fill" and color in codes:
                line.append(codes[color])
            else:
                raise DecodeError(f"unexpected mark {mark!r} at ({r}, {c})")
        cells.append(tuple(line))
    return cube_mod.ViewMatrix(
        kind=kind,
        view=image.meta["view"],
        base=image.meta["base"],
        cells=tuple(cells),
    )


_RENDERERS = {
    "paperfold": _render_paperfold,
    "multihop": _render_multihop,
    "ball": _render_ball,
    "maze": _render_maze,
    "sokoban": _render_sokoban,
    "cube": _render_cube,
}

_DECODERS = {
    "paperfold": _decode_paperfold,
    "multihop": _decode_multihop,
    "ball": _decode_ball,
    "maze": _decode_maze,
    "sokoban": _decode_sokoban,
    "cube": _decode_cube,
}


def render_state(task: str, state, resolution: int = DEFAULT_RESOLUTION) -> RasterImage:
    if task not in _RENDERERS:
        raise DomainError(f"unknown task {task!r}")
    return _RENDERERS[task](state, resolution)


def decode_state(image: RasterImage):
    task = image.meta.get("task")
    if task not in _DECODERS:
        raise DecodeError(f"image metadata names no known task: {task!r}")
    return _DECODERS[task](image)
