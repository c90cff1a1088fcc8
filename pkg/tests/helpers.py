"""Independent oracles shared by the unit tests and the acceptance gate.

Everything here recomputes task answers from first principles so the
production solvers have something genuinely separate to agree with.  The
cube brute force enumerates every heightmap on the base and projects each
one directly; it shares only the view-matrix dataclass and the iso color
code convention with the production search.
"""

from functools import lru_cache

import numpy as np

from worldlab.tasks import cube as cube_mod
from worldlab.tasks import paperfold as pf
from worldlab.tasks.cube import ViewMatrix, iso_color, iso_face

# ---- paperfold ---------------------------------------------------------


def legal_folds(rows, cols):
    folds = []
    for axis in ("v", "h"):
        extent = cols if axis == "v" else rows
        for direction in pf.DIRECTIONS[axis]:
            for line in range(1, extent):
                flap = (
                    line
                    if direction in ("left_over", "top_over")
                    else extent - line
                )
                if flap <= extent - flap:
                    folds.append(pf.Fold(axis=axis, line=line, direction=direction))
    return folds


def exhaustive_punched_sheets(grid=3, max_folds=2):
    """Every fold sequence up to max_folds, punched one cell at a time.

    Each folded sheet also appears once more with every cell punched at
    once, to exercise hole merging.
    """

    def expand(state, depth):
        if depth > 0:
            yield state
        if depth == max_folds:
            return
        for fold in legal_folds(state.rows, state.cols):
            yield from expand(pf.apply_fold(state, fold), depth + 1)

    shapes = pf.SHAPES
    for folded in expand(pf.new_sheet(grid), 0):
        for r in range(folded.rows):
            for c in range(folded.cols):
                yield pf.punch(folded, (r, c), "circle")
        everything = folded
        i = 0
        for r in range(folded.rows):
            for c in range(folded.cols):
                everything = pf.punch(everything, (r, c), shapes[i % len(shapes)])
                i += 1
        yield everything


# ---- cube --------------------------------------------------------------

_MIRROR = {"front": "front", "back": "back", "top": "top",
           "left": "right", "right": "left"}


def _flip_cells(cells):
    """Mirror a canvas horizontally; side faces trade places."""
    out = []
    for row in cells:
        line = []
        for code in reversed(row):
            if code is None or iso_face(code) == 0:
                line.append(code)
            else:
                face = 2 if iso_face(code) == 1 else 1
                line.append(iso_color(code) * 3 + face)
        out.append(tuple(line))
    return tuple(out)


@lru_cache(maxsize=None)
def all_heightmaps(n):
    """(m, n, n) array of every heightmap, indexed [y][x]."""
    levels = n + 1
    m = levels ** (n * n)
    idx = np.arange(m)
    digits = []
    for _ in range(n * n):
        digits.append(idx % levels)
        idx = idx // levels
    return np.stack(digits, axis=1).reshape(m, n, n).astype(np.int8)


def scan_visible(h, n, view, row, col):
    """First voxel met by the view ray at a flat-view cell, or None."""
    if view == "top":
        y, x = n - 1 - row, col
        return (x, y, h[y][x] - 1) if h[y][x] > 0 else None
    z = n - 1 - row
    if view == "front":
        x = col
        for y in range(n):
            if h[y][x] > z:
                return (x, y, z)
    elif view == "back":
        x = n - 1 - col
        for y in range(n - 1, -1, -1):
            if h[y][x] > z:
                return (x, y, z)
    elif view == "left":
        y = n - 1 - col
        for x in range(n):
            if h[y][x] > z:
                return (x, y, z)
    else:
        y = col
        for x in range(n - 1, -1, -1):
            if h[y][x] > z:
                return (x, y, z)
    return None


def _paint_diag(n, d, hs):
    """Visible (position, face) per canvas row of one diagonal pair.

    Blocks are painted far-to-near (larger x + y - z first) so nearer
    blocks overwrite; each block covers one top row and two side rows on
    both canvas columns of the pair.
    """
    length = n - abs(d)
    blocks = [
        (j, z)
        for j in range(length)
        for z in range(hs[j])
    ]
    blocks.sort(key=lambda jz: 2 * jz[0] + abs(d) - jz[1], reverse=True)
    rows = {}
    for j, z in blocks:
        r0 = 4 * (n - 1) - (2 * j + abs(d)) - 2 * z
        rows[r0] = (j, z, 0, 0)
        rows[r0 + 1] = (j, z, 1, 2)
        rows[r0 + 2] = (j, z, 1, 2)
    return rows


def _diag_cells(n, d):
    return [(j + max(d, 0), j + max(-d, 0)) for j in range(n - abs(d))]


def _given_diag(n, d, iso_cells):
    """Face pattern of one canvas column pair, colors stripped."""
    c0 = 2 * (d + n - 1)
    pattern = {}
    for r, row in enumerate(iso_cells):
        left, right = row[c0], row[c0 + 1]
        if left is None and right is None:
            continue
        if left is None or right is None:
            return None
        pattern[r] = (iso_face(left), iso_face(right))
    return pattern


def brute_cube(n, iso_view, orth_views, query_view, query_color):
    """Exhaustive counterpart of the consistency search.

    Returns (sorted counts, marked query view, number of consistent
    heightmaps) with the same conventions as the production search.
    """
    mirrored = iso_view.view == "iso_fr"
    if mirrored:
        iso_cells = _flip_cells(iso_view.cells)
        orth = {
            _MIRROR[name]: tuple(tuple(reversed(r)) for r in view.cells)
            for name, view in orth_views.items()
        }
        query = _MIRROR[query_view]
    else:
        iso_cells = iso_view.cells
        orth = {name: view.cells for name, view in orth_views.items()}
        query = query_view

    candidates = all_heightmaps(n)
    mask = np.ones(len(candidates), dtype=bool)

    # flat views constrain column maxima (side views) or occupancy (top)
    for name, cells in orth.items():
        if name == "top":
            occ = candidates > 0
            want = np.array(
                [[cells[n - 1 - y][x] is not None for x in range(n)] for y in range(n)]
            )
            mask &= (occ == want[None]).all(axis=(1, 2))
            continue
        filled = [sum(1 for r in range(n) if cells[r][c] is not None) for c in range(n)]
        if name in ("front", "back"):
            per_x = candidates.max(axis=1)
            for col in range(n):
                x = col if name == "front" else n - 1 - col
                mask &= per_x[:, x] == filled[col]
        else:
            per_y = candidates.max(axis=2)
            for col in range(n):
                y = n - 1 - col if name == "left" else col
                mask &= per_y[:, y] == filled[col]

    # iso canvas pairs depend only on the diagonal's height tuple, so each
    # diagonal admits a small allow-list of height codes
    levels = n + 1
    for d in range(-(n - 1), n):
        cells_d = _diag_cells(n, d)
        given = _given_diag(n, d, iso_cells)
        if given is None:
            mask[:] = False
            break
        allowed = []
        for code in range(levels ** len(cells_d)):
            rest, hs = code, []
            for _ in cells_d:
                hs.append(rest % levels)
                rest //= levels
            painted = _paint_diag(n, d, hs)
            if {r: (fl, fr) for r, (_, _, fl, fr) in painted.items()} == given:
                allowed.append(code)
        codes = np.zeros(len(candidates), dtype=np.int64)
        weight = 1
        for x, y in cells_d:
            codes += candidates[:, y, x].astype(np.int64) * weight
            weight *= levels
        mask &= np.isin(codes, np.asarray(allowed, dtype=np.int64))

    counts: set[int] = set()
    survivors = 0
    any_occ = [[False] * n for _ in range(n)]
    always_occ = [[True] * n for _ in range(n)]
    seen_colors = [[set() for _ in range(n)] for _ in range(n)]

    for hm in candidates[mask]:
        h = [[int(hm[y][x]) for x in range(n)] for y in range(n)]
        pins = {}
        ok = True
        for name, cells in orth.items():
            for row in range(n):
                for col in range(n):
                    want = cells[row][col]
                    if want is None:
                        continue
                    vox = scan_visible(h, n, name, row, col)
                    if vox is None or pins.get(vox, want) != want:
                        ok = False
                        break
                    pins[vox] = want
                if not ok:
                    break
            if not ok:
                break
        if not ok:
            continue
        for d in range(-(n - 1), n):
            cells_d = _diag_cells(n, d)
            painted = _paint_diag(n, d, [h[y][x] for x, y in cells_d])
            c0 = 2 * (d + n - 1)
            for r, (j, z, _, _) in painted.items():
                left, right = iso_cells[r][c0], iso_cells[r][c0 + 1]
                color = iso_color(left)
                if iso_color(right) != color:
                    ok = False
                    break
                x, y = cells_d[j]
                vox = (x, y, z)
                if pins.get(vox, color) != color:
                    ok = False
                    break
                pins[vox] = color
            if not ok:
                break
        if not ok:
            continue
        survivors += 1
        base = free = 0
        for row in range(n):
            for col in range(n):
                vox = scan_visible(h, n, query, row, col)
                if vox is None:
                    always_occ[row][col] = False
                    continue
                any_occ[row][col] = True
                pin = pins.get(vox)
                seen_colors[row][col].add("free" if pin is None else pin)
                if pin is None:
                    free += 1
                elif pin == query_color:
                    base += 1
        counts.update(range(base, base + free + 1))

    if survivors == 0:
        return [], None, 0
    lines = []
    for row in range(n):
        line = []
        for col in range(n):
            if not any_occ[row][col]:
                line.append(None)
            elif always_occ[row][col] and seen_colors[row][col] in ({0}, {1}):
                line.append(next(iter(seen_colors[row][col])))
            else:
                line.append(cube_mod.AUX)
        lines.append(tuple(line))
    cells = tuple(lines)
    if mirrored:
        cells = tuple(tuple(reversed(r)) for r in cells)
    marked = ViewMatrix(kind="orth", view=query_view, base=n, cells=cells)
    return sorted(counts), marked, survivors


def random_cube_problem(rng, n=3):
    """A stack plus the view assignment the generator would draw."""
    while True:
        heights = tuple(
            tuple(rng.randint(0, n) for _ in range(n)) for _ in range(n)
        )
        if not any(any(row) for row in heights):
            continue
        colors = {
            (x, y, z): rng.randint(0, 1)
            for y in range(n)
            for x in range(n)
            for z in range(heights[y][x])
        }
        stack = cube_mod.CubeStack(base=n, heights=heights, colors=colors)
        iso_name = rng.choice(cube_mod.ISO_VIEWS)
        flats = rng.sample(cube_mod.ORTH_VIEWS, 2)
        query_view = rng.choice([v for v in cube_mod.ORTH_VIEWS if v not in flats])
        iso_view = cube_mod.project(stack, iso_name)
        orth_views = {name: cube_mod.project(stack, name) for name in flats}
        return stack, iso_view, orth_views, query_view, rng.randint(0, 1)
