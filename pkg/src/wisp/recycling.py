"""Reclaiming cheap whitespace along the die boundary.

For every outline edge a strip is grown inward one pixel row (or column) at
a time; growth continues while every pixel in the next row is whitespace,
scores below a percentile threshold of the score map, and is not part of a
wasted region. Strips at least `min_depth_px` deep become trim candidates.
Subtracting the strips from the outline yields a smaller die; trims that
would cut or orphan a macro or cell region, or split the outline, are
rejected outright.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from shapely.geometry import Polygon, box
from shapely.ops import unary_union

from .floorplan import Floorplan
from .geometry import GeometryError, RectilinearOutline, rects_overlap
from .raster import PixelClass, PixelGrid, pixel_span
from .scoring import ScoreMap
from .segmentation import ParsedMasks


class ReclaimError(ValueError):
    """Raised when a requested trim would damage the floorplan."""


@dataclass(frozen=True)
class ReclaimStrip:
    """One grown border strip, in both pixel and micron coordinates."""

    edge_index: int
    direction: str               # inward growth direction: N, E, S or W
    depth_px: int
    rows: tuple[int, int]        # inclusive pixel rows covered
    cols: tuple[int, int]        # inclusive pixel cols covered
    rect_um: tuple[float, float, float, float]  # x0, y0, x1, y1


@dataclass(frozen=True)
class ReclaimPlan:
    strips: tuple[ReclaimStrip, ...]
    outline: RectilinearOutline
    area_before: float
    area_after: float
    delta_area: float
    delta_fraction: float


def reclaim_candidates(grid: PixelGrid, smap: ScoreMap, parsed: ParsedMasks,
                       tau_percentile: float = 25.0,
                       min_depth_px: int = 5) -> list[ReclaimStrip]:
    """Grow one candidate strip inward from every outline edge.

    The score threshold is the `tau_percentile`-th percentile of the score
    map over its domain. Strips shallower than `min_depth_px` are dropped.
    Candidates are emitted in outline edge order, so output is deterministic.
    """
    if not 0.0 <= tau_percentile <= 100.0:
        raise ReclaimError(f"tau_percentile must be in [0, 100], got {tau_percentile}")
    if min_depth_px < 1:
        raise ReclaimError(f"min_depth_px must be >= 1, got {min_depth_px}")
    domain_values = smap.values[smap.domain]
    if domain_values.size == 0:
        raise ReclaimError("score map has an empty domain")
    threshold = float(np.percentile(domain_values, tau_percentile))

    ox, oy = grid.origin
    s = grid.scale
    height, width = grid.classes.shape
    reclaimable = ((grid.classes == PixelClass.WHITESPACE)
                   & (smap.values < threshold) & ~parsed.wasted)

    strips: list[ReclaimStrip] = []
    for edge_index, ((x1, y1), (x2, y2)) in enumerate(grid.outline.edges()):
        if y1 == y2:  # horizontal edge
            cspan = pixel_span(min(x1, x2) - ox, max(x1, x2) - ox, s, width)
            if cspan is None:
                continue
            c0, c1 = cspan
            boundary_row = math.ceil((y1 - oy) / s - 0.5)
            if x2 > x1:  # counter-clockwise, interior above: bottom edge
                start, step, direction = boundary_row, 1, "N"
            else:        # interior below: top edge
                start, step, direction = boundary_row - 1, -1, "S"
            depth = 0
            r = start
            while 0 <= r < height and reclaimable[r, c0:c1 + 1].all():
                depth += 1
                r += step
            if depth < min_depth_px:
                continue
            rows = (start, start + depth - 1) if step == 1 else (start - depth + 1, start)
            inner = oy + (start + step * depth) * s if step == 1 else oy + (start - depth + 1) * s
            if step == 1:
                rect = (min(x1, x2), y1, max(x1, x2), inner)
            else:
                rect = (min(x1, x2), inner, max(x1, x2), y1)
            strips.append(ReclaimStrip(edge_index, direction, depth, rows,
                                       (c0, c1), rect))
        else:  # vertical edge
            rspan = pixel_span(min(y1, y2) - oy, max(y1, y2) - oy, s, height)
            if rspan is None:
                continue
            r0, r1 = rspan
            boundary_col = math.ceil((x1 - ox) / s - 0.5)
            if y2 > y1:  # interior to the left: right edge
                start, step, direction = boundary_col - 1, -1, "W"
            else:        # interior to the right: left edge
                start, step, direction = boundary_col, 1, "E"
            depth = 0
            c = start
            while 0 <= c < width and reclaimable[r0:r1 + 1, c].all():
                depth += 1
                c += step
            if depth < min_depth_px:
                continue
            cols = (start, start + depth - 1) if step == 1 else (start - depth + 1, start)
            if step == 1:
                inner = ox + (start + depth) * s
                rect = (x1, min(y1, y2), inner, max(y1, y2))
            else:
                inner = ox + (start - depth + 1) * s
                rect = (inner, min(y1, y2), x1, max(y1, y2))
            strips.append(ReclaimStrip(edge_index, direction, depth, (r0, r1),
                                       cols, rect))
    return strips


def _drop_collinear(points: list[tuple[float, float]]) -> list[tuple[float, float]]:
    pts = list(points)
    changed = True
    while changed and len(pts) > 4:
        changed = False
        for i in range(len(pts)):
            prev_pt = pts[i - 1]
            cur = pts[i]
            next_pt = pts[(i + 1) % len(pts)]
            if ((prev_pt[0] == cur[0] == next_pt[0])
                    or (prev_pt[1] == cur[1] == next_pt[1])
                    or prev_pt == cur):
                del pts[i]
                changed = True
                break
    return pts


def trim_outline(fp: Floorplan, strips: list[ReclaimStrip]) -> ReclaimPlan:
    """Subtract accepted strips from the outline and account for the area.

    Raises ReclaimError when a strip overlaps a macro or cell region, when
    the trimmed outline is no longer a single simple polygon, or when any
    macro or cell no longer fits inside it.
    """
    area_before = fp.outline.area_exact()
    if not strips:
        return ReclaimPlan((), fp.outline, float(area_before), float(area_before),
                           0.0, 0.0)
    violations = []
    for strip in strips:
        x0, y0, x1, y1 = strip.rect_um
        if x1 <= x0 or y1 <= y0:
            raise ReclaimError(f"strip on edge {strip.edge_index} is degenerate")
        srect = (x0, y0, x1 - x0, y1 - y0)
        for m in fp.macros:
            if rects_overlap(m.rect, srect):
                violations.append(
                    f"strip on edge {strip.edge_index} would cut macro '{m.name}'")
        for i, cell in enumerate(fp.cells):
            if rects_overlap(cell.rect, srect):
                violations.append(
                    f"strip on edge {strip.edge_index} would cut cell region {i}")
    if violations:
        raise ReclaimError("; ".join(violations))

    poly = Polygon(fp.outline.vertices)
    cut = unary_union([box(*strip.rect_um) for strip in strips])
    result = poly.difference(cut)
    if result.is_empty:
        raise ReclaimError("trim would remove the entire outline")
    if result.geom_type != "Polygon":
        raise ReclaimError("trim would split the outline into disconnected pieces")
    if list(result.interiors):
        raise ReclaimError("trim would punch a hole in the outline")
    coords = _drop_collinear([(float(x), float(y)) for x, y in result.exterior.coords[:-1]])
    try:
        outline = RectilinearOutline.from_points(coords)
    except GeometryError as exc:
        raise ReclaimError(f"trimmed outline is not rectilinear: {exc}") from exc

    for m in fp.macros:
        if not outline.contains_rect(*m.rect):
            raise ReclaimError(f"macro '{m.name}' would be orphaned by the trim")
    for i, cell in enumerate(fp.cells):
        if not outline.contains_rect(*cell.rect):
            raise ReclaimError(f"cell region {i} would be orphaned by the trim")

    area_after = outline.area_exact()
    delta = area_before - area_after
    return ReclaimPlan(tuple(strips), outline, float(area_before),
                       float(area_after), float(delta),
                       float(delta / area_before))
