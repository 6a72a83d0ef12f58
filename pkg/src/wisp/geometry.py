"""Axis-aligned rectilinear geometry in micron coordinates.

The outline type here is the ground truth for "inside the die": raster
classification, macro legality, and outline trimming all defer to it.
Containment tests are closed (boundary points count as inside) and use exact
float comparisons, so shapes that merely touch are legal.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

Point = tuple[float, float]
Rect = tuple[float, float, float, float]  # x, y, w, h


class GeometryError(ValueError):
    """Raised for outlines that are not simple axis-aligned polygons."""


def _signed_area2(vertices: Sequence[Point]) -> float:
    # Twice the shoelace area; positive for counter-clockwise order.
    total = 0.0
    n = len(vertices)
    for i in range(n):
        x1, y1 = vertices[i]
        x2, y2 = vertices[(i + 1) % n]
        total += x1 * y2 - x2 * y1
    return total


def _segments_cross(a1: Point, a2: Point, b1: Point, b2: Point) -> bool:
    """True when two axis-aligned segments share more than an endpoint."""
    ax1, ax2 = sorted((a1[0], a2[0]))
    ay1, ay2 = sorted((a1[1], a2[1]))
    bx1, bx2 = sorted((b1[0], b2[0]))
    by1, by2 = sorted((b1[1], b2[1]))
    a_horiz = a1[1] == a2[1]
    b_horiz = b1[1] == b2[1]
    if a_horiz != b_horiz:
        if not a_horiz:
            ax1, ax2, ay1, ay2, bx1, bx2, by1, by2 = bx1, bx2, by1, by2, ax1, ax2, ay1, ay2
        # horizontal a against vertical b: proper or T-shaped crossing
        return bx1 > ax1 and bx1 < ax2 and ay1 > by1 and ay1 < by2
    # parallel: collinear overlap counts, shared endpoint does not
    if a_horiz:
        return ay1 == by1 and ax1 < bx2 and bx1 < ax2
    return ax1 == bx1 and ay1 < by2 and by1 < ay2


@dataclass(frozen=True)
class RectilinearOutline:
    """Simple axis-aligned polygon, vertices in counter-clockwise order."""

    vertices: tuple[Point, ...]

    @classmethod
    def from_points(cls, points: Iterable[Sequence[float]]) -> "RectilinearOutline":
        """Validate and normalize a vertex list.

        Rejects fewer than 4 vertices, non-axis-aligned or zero-length edges,
        collinear (180 degree) corners, self-intersection, and zero area.
        Clockwise input is reversed so callers may pass either orientation.
        """
        verts = [(float(p[0]), float(p[1])) for p in points]
        if len(verts) < 4:
            raise GeometryError(f"outline needs at least 4 vertices, got {len(verts)}")
        if len(verts) % 2 != 0:
            raise GeometryError("rectilinear outline must have an even vertex count")
        n = len(verts)
        dirs = []
        for i in range(n):
            x1, y1 = verts[i]
            x2, y2 = verts[(i + 1) % n]
            if x1 == x2 and y1 == y2:
                raise GeometryError(f"zero-length edge at vertex {i}")
            if x1 != x2 and y1 != y2:
                raise GeometryError(f"edge {i} is not axis-aligned")
            dirs.append("H" if y1 == y2 else "V")
        for i in range(n):
            if dirs[i] == dirs[(i + 1) % n]:
                raise GeometryError(f"collinear corner at vertex {(i + 1) % n}")
        area2 = _signed_area2(verts)
        if area2 == 0.0:
            raise GeometryError("outline encloses zero area")
        if area2 < 0.0:
            verts.reverse()
        edges = [(verts[i], verts[(i + 1) % n]) for i in range(n)]
        for i in range(n):
            for j in range(i + 1, n):
                if j == i + 1 or (i == 0 and j == n - 1):
                    continue  # adjacent edges legitimately share an endpoint
                if _segments_cross(*edges[i], *edges[j]):
                    raise GeometryError(f"outline self-intersects (edges {i} and {j})")
        return cls(tuple(verts))

    def area(self) -> float:
        return abs(_signed_area2(self.vertices)) / 2.0

    def area_exact(self) -> Fraction:
        """Shoelace area in exact rational arithmetic."""
        total = Fraction(0)
        n = len(self.vertices)
        for i in range(n):
            x1, y1 = self.vertices[i]
            x2, y2 = self.vertices[(i + 1) % n]
            total += Fraction(x1) * Fraction(y2) - Fraction(x2) * Fraction(y1)
        return abs(total) / 2

    def bbox(self) -> Rect:
        xs = [v[0] for v in self.vertices]
        ys = [v[1] for v in self.vertices]
        return min(xs), min(ys), max(xs) - min(xs), max(ys) - min(ys)

    def edges(self) -> list[tuple[Point, Point]]:
        n = len(self.vertices)
        return [(self.vertices[i], self.vertices[(i + 1) % n]) for i in range(n)]

    @cached_property
    def _slabs(self) -> tuple[list[float], list[list[tuple[float, float]]]]:
        """Vertical slab decomposition: sorted x cuts and, per slab, the
        y-intervals that are inside the polygon.

        Every horizontal edge either spans a slab completely or misses it, so
        sorting the spanning edges by y and pairing them up gives the filled
        intervals exactly, with no float tolerance needed.
        """
        xs = sorted({v[0] for v in self.vertices})
        hedges = [
            (min(a[0], b[0]), max(a[0], b[0]), a[1])
            for a, b in self.edges()
            if a[1] == b[1]
        ]
        intervals: list[list[tuple[float, float]]] = []
        for x0, x1 in zip(xs, xs[1:]):
            ys = sorted(ey for ex0, ex1, ey in hedges if ex0 <= x0 and ex1 >= x1)
            intervals.append(list(zip(ys[0::2], ys[1::2])))
        return xs, intervals

    def contains_point(self, x: float, y: float) -> bool:
        """Closed containment: points on the boundary are inside."""
        for (x1, y1), (x2, y2) in self.edges():
            if x1 == x2:
                if x == x1 and min(y1, y2) <= y <= max(y1, y2):
                    return True
            elif y == y1 and min(x1, x2) <= x <= max(x1, x2):
                return True
        inside = False
        for (x1, y1), (x2, y2) in self.edges():
            if x1 == x2 and (y1 <= y < y2 or y2 <= y < y1) and x < x1:
                inside = not inside
        return inside

    def contains_rect(self, x: float, y: float, w: float, h: float) -> bool:
        """Closed containment of an axis-aligned rectangle, exact comparisons."""
        if w < 0 or h < 0:
            raise GeometryError("rectangle with negative extent")
        xs, intervals = self._slabs
        if x < xs[0] or x + w > xs[-1]:
            return False
        for (x0, x1), spans in zip(zip(xs, xs[1:]), intervals):
            if x1 <= x or x0 >= x + w:
                continue
            if not any(lo <= y and y + h <= hi for lo, hi in spans):
                return False
        return True


def rects_overlap(a: Rect, b: Rect) -> bool:
    """True when rectangle interiors intersect; shared edges do not count."""
    ax, ay, aw, ah = a
    bx, by, bw, bh = b
    return ax < bx + bw and bx < ax + aw and ay < by + bh and by < ay + ah
