"""Cell-grid rasterization with a fixed 16-color palette.

Every dataset image is a grid of square cells drawn from a shared palette,
with optional 1-px grid lines on cell borders and parametric glyphs inside
cells.  Rendering is pure integer work over uint8 arrays, so identical
states produce identical bytes; decoding inverts it by sampling cell
interiors and matching glyph masks exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import DecodeError, DomainError
from .pngio import read_png, write_png

PALETTE: list[tuple[int, int, int]] = [
    (255, 255, 255),  # 0 white
    (0, 0, 0),        # 1 black
    (150, 150, 150),  # 2 gray
    (220, 50, 47),    # 3 red
    (40, 160, 60),    # 4 green
    (38, 90, 220),    # 5 blue
    (230, 200, 40),   # 6 yellow
    (140, 60, 180),   # 7 purple
    (235, 140, 30),   # 8 orange
    (40, 180, 190),   # 9 cyan
    (140, 90, 40),    # 10 brown
    (240, 140, 180),  # 11 pink
    (20, 100, 50),    # 12 dark green
    (25, 35, 110),    # 13 navy
    (235, 225, 190),  # 14 beige
    (200, 40, 140),   # 15 magenta
]

COLOR = {
    "white": 0,
    "black": 1,
    "gray": 2,
    "red": 3,
    "green": 4,
    "blue": 5,
    "yellow": 6,
    "purple": 7,
    "orange": 8,
    "cyan": 9,
    "brown": 10,
    "pink": 11,
    "dark_green": 12,
    "navy": 13,
    "beige": 14,
    "magenta": 15,
}

GLYPHS = ("circle", "triangle", "star", "diamond", "square", "dot", "ring")

MIN_CELL_PX = 8
MIN_RESOLUTION = 64
MAX_RESOLUTION = 1024


@dataclass
class RasterImage:
    """Indexed-palette image plus the geometry metadata embedded in its PNG."""

    pixels: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    def to_png_bytes(self) -> bytes:
        return write_png(self.pixels, PALETTE, self.meta or None)

    @classmethod
    def from_png_bytes(cls, data: bytes) -> "RasterImage":
        pixels, palette, meta = read_png(data)
        if palette != PALETTE[: len(palette)]:
            raise DecodeError("image palette does not match the package palette")
        return cls(pixels=pixels, meta=meta)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, RasterImage)
            and self.meta == other.meta
            and np.array_equal(self.pixels, other.pixels)
        )


def cell_px_for(resolution: int, rows: int, cols: int) -> int:
    """Largest cell pitch that fits a rows x cols board into resolution."""
    if not MIN_RESOLUTION <= resolution <= MAX_RESOLUTION:
        raise DomainError(
            f"resolution {resolution} outside [{MIN_RESOLUTION}, {MAX_RESOLUTION}]"
        )
    px = (resolution - 1) // max(rows, cols)
    if px < MIN_CELL_PX:
        raise DomainError(
            f"resolution {resolution} gives {px}px cells for a "
            f"{rows}x{cols} board; need at least {MIN_CELL_PX}px"
        )
    return px


@lru_cache(maxsize=None)
def glyph_mask(shape: str, size: int) -> np.ndarray:
    """Boolean (size, size) mask of a glyph; the renderer and decoder share it."""
    if shape not in GLYPHS:
        raise DomainError(f"unknown glyph {shape!r}")
    if size < MIN_CELL_PX - 1:
        raise DomainError(f"glyph size {size} too small")
    c = (size - 1) / 2.0
    yy, xx = np.mgrid[0:size, 0:size]
    dx, dy = xx - c, yy - c
    if shape == "circle":
        return dx * dx + dy * dy <= (0.40 * size) ** 2
    if shape == "dot":
        return dx * dx + dy * dy <= (0.18 * size) ** 2
    if shape == "ring":
        r2 = dx * dx + dy * dy
        return ((0.26 * size) ** 2 <= r2) & (r2 <= (0.42 * size) ** 2)
    if shape == "square":
        return np.maximum(np.abs(dx), np.abs(dy)) <= 0.34 * size
    if shape == "diamond":
        return np.abs(dx) + np.abs(dy) <= 0.44 * size
    if shape == "triangle":
        # upward triangle: apex on top, horizontal base
        top, bottom, half = -0.42 * size, 0.36 * size, 0.44 * size
        inside = (dy >= top) & (dy <= bottom)
        frac = (dy - top) / (bottom - top)
        return inside & (np.abs(dx) <= half * np.clip(frac, 0.0, 1.0))
    # five-point star via even-odd polygon fill
    outer, inner = 0.46 * size, 0.20 * size
    angles = -np.pi / 2 + np.arange(10) * np.pi / 5
    radii = np.where(np.arange(10) % 2 == 0, outer, inner)
    vx = radii * np.cos(angles)
    vy = radii * np.sin(angles)
    mask = np.zeros((size, size), dtype=bool)
    px, py = dx.ravel(), dy.ravel()
    crossings = np.zeros(px.shape[0], dtype=np.int64)
    for k in range(10):
        x1, y1 = vx[k], vy[k]
        x2, y2 = vx[(k + 1) % 10], vy[(k + 1) % 10]
        cond = (y1 <= py) != (y2 <= py)
        with np.errstate(divide="ignore", invalid="ignore"):
            xi = x1 + (py - y1) * (x2 - x1) / (y2 - y1)
        crossings += (cond & (px < xi)).astype(np.int64)
    mask.ravel()[:] = crossings % 2 == 1
    return mask


class CellCanvas:
    """Mutable cell-grid drawing surface.

    The image side is cells * cell_px + 1 so grid lines land on shared
    borders.  Cell interiors are the (cell_px - 1) square inside the border
    lines; glyphs are drawn there.
    """

    def __init__(
        self,
        rows: int,
        cols: int,
        cell_px: int,
        background: int = COLOR["white"],
        meta: dict | None = None,
    ):
        if rows < 1 or cols < 1:
            raise DomainError("canvas needs at least one cell")
        if cell_px < MIN_CELL_PX:
            raise DomainError(f"cell pitch {cell_px} below minimum {MIN_CELL_PX}")
        self.rows, self.cols, self.cell_px = rows, cols, cell_px
        self.pixels = np.full(
            (rows * cell_px + 1, cols * cell_px + 1), background, dtype=np.uint8
        )
        self.meta = dict(meta or {})
        self.meta.update({"rows": rows, "cols": cols, "cell": cell_px})

    def _check(self, r: int, c: int):
        if not (0 <= r < self.rows and 0 <= c < self.cols):
            raise DomainError(f"cell ({r}, {c}) outside {self.rows}x{self.cols} board")

    def interior(self, r: int, c: int) -> tuple[slice, slice]:
        cp = self.cell_px
        return slice(r * cp + 1, (r + 1) * cp), slice(c * cp + 1, (c + 1) * cp)

    def fill_cell(self, r: int, c: int, color: int):
        self._check(r, c)
        sy, sx = self.interior(r, c)
        self.pixels[sy, sx] = color

    def glyph(self, r: int, c: int, shape: str, color: int):
        self._check(r, c)
        sy, sx = self.interior(r, c)
        mask = glyph_mask(shape, self.cell_px - 1)
        region = self.pixels[sy, sx]
        region[mask] = color

    def grid_lines(self, color: int = COLOR["gray"]):
        cp = self.cell_px
        for r in range(self.rows + 1):
            self.pixels[r * cp, :] = color
        for c in range(self.cols + 1):
            self.pixels[:, c * cp] = color

    def edge_line(self, r: int, c: int, side: str, color: int, thickness: int = 3):
        """Draw a wall segment on one side of a cell (side in U/D/L/R)."""
        self._check(r, c)
        cp = self.cell_px
        half = thickness // 2
        if side in ("U", "D"):
            y = r * cp if side == "U" else (r + 1) * cp
            y0, y1 = max(y - half, 0), min(y + half + 1, self.pixels.shape[0])
            self.pixels[y0:y1, c * cp : (c + 1) * cp + 1] = color
        elif side in ("L", "R"):
            x = c * cp if side == "L" else (c + 1) * cp
            x0, x1 = max(x - half, 0), min(x + half + 1, self.pixels.shape[1])
            self.pixels[r * cp : (r + 1) * cp + 1, x0:x1] = color
        else:
            raise DomainError(f"unknown side {side!r}")

    def center(self, r: int, c: int) -> tuple[int, int]:
        cp = self.cell_px
        return r * cp + cp // 2, c * cp + cp // 2

    def link_cells(self, r1: int, c1: int, r2: int, c2: int, color: int, thickness: int = 2):
        """Straight axis-aligned segment between two cell centers."""
        self._check(r1, c1)
        self._check(r2, c2)
        if r1 != r2 and c1 != c2:
            raise DomainError("link_cells only draws axis-aligned segments")
        y1, x1 = self.center(r1, c1)
        y2, x2 = self.center(r2, c2)
        half = thickness // 2
        y0, y3 = min(y1, y2), max(y1, y2)
        x0, x3 = min(x1, x2), max(x1, x2)
        self.pixels[y0 - half : y3 + half + 1, x0 - half : x3 + half + 1] = color

    def image(self, extra_meta: dict | None = None) -> RasterImage:
        meta = dict(self.meta)
        if extra_meta:
            meta.update(extra_meta)
        return RasterImage(pixels=self.pixels.copy(), meta=meta)


def classify_cell(
    image: RasterImage, r: int, c: int, background: int = COLOR["white"]
) -> tuple[str, int | None]:
    """Inverse of cell drawing: ("empty"|"fill"|glyph name, color).

    Samples the cell interior, isolates the dominant non-background color,
    and matches the resulting mask against the glyph library exactly.
    """
    cp = image.meta.get("cell")
    if not cp:
        raise DecodeError("image metadata lacks cell pitch")
    sy = slice(r * cp + 1, (r + 1) * cp)
    sx = slice(c * cp + 1, (c + 1) * cp)
    region = image.pixels[sy, sx]
    if region.shape != (cp - 1, cp - 1):
        raise DecodeError(f"cell ({r}, {c}) out of image bounds")
    values, counts = np.unique(region, return_counts=True)
    fg = [(int(v), int(n)) for v, n in zip(values, counts) if v != background]
    if not fg:
        return "empty", None
    color = max(fg, key=lambda vn: vn[1])[0]
    mask = region == color
    if mask.all():
        return "fill", color
    for shape in GLYPHS:
        if np.array_equal(mask, glyph_mask(shape, cp - 1)):
            return shape, color
    raise DecodeError(f"cell ({r}, {c}) holds no recognizable glyph")
