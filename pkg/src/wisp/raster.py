"""Floorplan rasterization onto a fixed-size pixel canvas.

The longest outline side maps to `max_side` pixels; one scale factor serves
both axes so pixels are square. A pixel takes the class of its center:
centers outside the outline are Outside regardless of any overlapping shape,
and inside the outline macros beat cell regions beat whitespace. Row 0 is the
bottom of the die; image writers flip so files read top-down as usual.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum

import numpy as np
from PIL import Image

from .floorplan import Floorplan, MacroInstance
from .geometry import RectilinearOutline


class RasterError(ValueError):
    """Raised for unusable raster parameters or degenerate geometry."""


class PixelClass(IntEnum):
    OUTSIDE = 0
    WHITESPACE = 1
    CELL = 2
    MACRO = 3


# RGB palette used by the renderer and assumed by the mask extractor.
DEFAULT_PALETTE: dict[PixelClass, tuple[int, int, int]] = {
    PixelClass.WHITESPACE: (255, 255, 255),
    PixelClass.MACRO: (180, 0, 0),
    PixelClass.CELL: (0, 0, 180),
    PixelClass.OUTSIDE: (80, 80, 80),
}


def pixel_span(lo: float, hi: float, scale: float, n: int) -> tuple[int, int] | None:
    """Inclusive index range of pixels whose centers fall in [lo, hi).

    Returns None when no center lands in the interval after clipping to the
    canvas. Center of pixel i sits at (i + 0.5) * scale.
    """
    first = math.ceil(lo / scale - 0.5)
    last = math.ceil(hi / scale - 0.5) - 1
    first = max(first, 0)
    last = min(last, n - 1)
    if last < first:
        return None
    return first, last


@dataclass(frozen=True)
class PixelGrid:
    """Classified raster of one floorplan placement.

    `classes` and `macro_id` are (height, width) arrays indexed [row, col]
    with row 0 at the bottom; `macro_id` is -1 where no macro covers the
    pixel, otherwise the index into the source floorplan's macro tuple.
    `macro_rects_px` are the macro rectangles in continuous pixel units.
    """

    width: int
    height: int
    scale: float
    origin: tuple[float, float]
    classes: np.ndarray
    macro_id: np.ndarray
    macro_rects_px: tuple[tuple[float, float, float, float], ...]
    outline: RectilinearOutline

    def to_um(self, px: float, axis_origin: float) -> float:
        return axis_origin + px * self.scale


class Canvas:
    """Reusable rasterization context for one outline and cell set.

    The outline/cell classification never changes while macros move, so the
    annealer builds a Canvas once and re-paints macros per proposal.
    """

    def __init__(self, outline: RectilinearOutline, base_classes: np.ndarray,
                 scale: float, width: int, height: int, origin: tuple[float, float]):
        self.outline = outline
        self.scale = scale
        self.width = width
        self.height = height
        self.origin = origin
        self._base = base_classes

    @classmethod
    def from_floorplan(cls, fp: Floorplan, max_side: int = 800) -> "Canvas":
        if max_side < 1:
            raise RasterError(f"max_side must be >= 1, got {max_side}")
        x0, y0, w_um, h_um = fp.outline.bbox()
        scale = max(w_um, h_um) / max_side
        width = max(1, round(w_um / scale))
        height = max(1, round(h_um / scale))

        inside = _inside_mask(fp.outline, width, height, scale, x0, y0)
        base = np.where(inside, np.uint8(PixelClass.WHITESPACE), np.uint8(PixelClass.OUTSIDE))
        for cell in fp.cells:
            if cell.utilization <= 0.0:
                continue
            cspan = pixel_span(cell.x - x0, cell.x + cell.w - x0, scale, width)
            rspan = pixel_span(cell.y - y0, cell.y + cell.h - y0, scale, height)
            if cspan is None or rspan is None:
                continue
            block = base[rspan[0]:rspan[1] + 1, cspan[0]:cspan[1] + 1]
            block[block == PixelClass.WHITESPACE] = PixelClass.CELL
        return cls(fp.outline, base, scale, width, height, (x0, y0))

    def paint(self, macros: tuple[MacroInstance, ...]) -> PixelGrid:
        """Stamp macro rectangles over the cached base classification."""
        x0, y0 = self.origin
        classes = self._base.copy()
        macro_id = np.full((self.height, self.width), -1, dtype=np.int32)
        rects_px = []
        for idx, m in enumerate(macros):
            rects_px.append(((m.x - x0) / self.scale, (m.y - y0) / self.scale,
                             m.w / self.scale, m.h / self.scale))
            cspan = pixel_span(m.x - x0, m.x + m.w - x0, self.scale, self.width)
            rspan = pixel_span(m.y - y0, m.y + m.h - y0, self.scale, self.height)
            if cspan is None or rspan is None:
                continue
            block = classes[rspan[0]:rspan[1] + 1, cspan[0]:cspan[1] + 1]
            covered = block != PixelClass.OUTSIDE
            block[covered] = PixelClass.MACRO
            macro_id[rspan[0]:rspan[1] + 1, cspan[0]:cspan[1] + 1][covered] = idx
        return PixelGrid(self.width, self.height, self.scale, self.origin, classes,
                         macro_id, tuple(rects_px), self.outline)


def _inside_mask(outline: RectilinearOutline, width: int, height: int,
                 scale: float, x0: float, y0: float) -> np.ndarray:
    """Even-odd test of every pixel center against the outline, vectorized
    as one parity flip per vertical outline edge."""
    xs = (np.arange(width) + 0.5) * scale + x0
    ys = (np.arange(height) + 0.5) * scale + y0
    inside = np.zeros((height, width), dtype=bool)
    for (x1, y1), (x2, y2) in outline.edges():
        if x1 != x2:
            continue
        ylo, yhi = (y1, y2) if y1 < y2 else (y2, y1)
        rows = (ys >= ylo) & (ys < yhi)
        cols = xs < x1
        inside ^= rows[:, None] & cols[None, :]
    return inside


def rasterize(fp: Floorplan, max_side: int = 800) -> PixelGrid:
    """Render a floorplan to a classified pixel grid."""
    return Canvas.from_floorplan(fp, max_side).paint(fp.macros)


def render_rgb(grid: PixelGrid, palette: dict[PixelClass, tuple[int, int, int]] | None = None) -> np.ndarray:
    """Map pixel classes to RGB; returns (height, width, 3) uint8."""
    pal = DEFAULT_PALETTE if palette is None else palette
    lut = np.zeros((4, 3), dtype=np.uint8)
    for cls, color in pal.items():
        lut[int(cls)] = color
    return lut[grid.classes]


def write_png(path: str, rgb: np.ndarray) -> None:
    """Write an RGB array to PNG, flipping so row 0 lands at the bottom."""
    Image.fromarray(rgb[::-1], mode="RGB").save(path, format="PNG")


def write_ppm(path: str, rgb: np.ndarray) -> None:
    """Write binary (P6) PPM with the same orientation as write_png."""
    flipped = np.ascontiguousarray(rgb[::-1])
    h, w = flipped.shape[:2]
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(flipped.tobytes())


def write_mask_png(path: str, mask: np.ndarray) -> None:
    """Write a boolean mask as an 8-bit grayscale PNG (True -> 255)."""
    img = (mask[::-1].astype(np.uint8)) * 255
    Image.fromarray(img, mode="L").save(path, format="PNG")


def read_png_rgb(path: str) -> np.ndarray:
    """Read a PNG back into the internal bottom-up row order."""
    img = Image.open(path).convert("RGB")
    return np.asarray(img, dtype=np.uint8)[::-1]
