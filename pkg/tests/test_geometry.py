"""Outline validation, area, and containment — cross-checked against shapely
and a test-local even-odd ray cast so the two routes stay independent."""

from fractions import Fraction

import pytest
from shapely.geometry import Point, Polygon, box

from wisp.geometry import GeometryError, RectilinearOutline, rects_overlap
from wisp.rng import Xoshiro256StarStar

RECT = [(0, 0), (100, 0), (100, 80), (0, 80)]
LSHAPE = [(0, 0), (100, 0), (100, 60), (60, 60), (60, 100), (0, 100)]
ZSHAPE = [(0, 0), (120, 0), (120, 40), (80, 40), (80, 80), (40, 80), (40, 120), (0, 120)]
USHAPE = [(0, 0), (90, 0), (90, 70), (60, 70), (60, 30), (30, 30), (30, 70), (0, 70)]
PLUS = [(30, 0), (60, 0), (60, 30), (90, 30), (90, 60), (60, 60), (60, 90),
        (30, 90), (30, 60), (0, 60), (0, 30), (30, 30)]
STAIR = [(0, 0), (40, 0), (40, 20), (70, 20), (70, 50), (100, 50), (100, 90), (0, 90)]
ALL_SHAPES = [RECT, LSHAPE, ZSHAPE, USHAPE, PLUS, STAIR]


def _raycast_inside(pts, x, y):
    """Even-odd ray cast, horizontal ray to +x. Boundary handled separately."""
    n = len(pts)
    for i in range(n):
        x1, y1 = pts[i]
        x2, y2 = pts[(i + 1) % n]
        if x1 == x2:  # vertical segment
            if x == x1 and min(y1, y2) <= y <= max(y1, y2):
                return True
        else:  # horizontal segment
            if y == y1 and min(x1, x2) <= x <= max(x1, x2):
                return True
    inside = False
    for i in range(n):
        x1, y1 = pts[i]
        x2, y2 = pts[(i + 1) % n]
        if x1 == x2 and (min(y1, y2) <= y < max(y1, y2)) and x < x1:
            inside = not inside
    return inside


def test_lshape_area_frozen():
    outline = RectilinearOutline.from_points(LSHAPE)
    assert outline.area() == 8400.0
    assert outline.area_exact() == Fraction(8400)


def test_rect_area_and_bbox():
    outline = RectilinearOutline.from_points(RECT)
    assert outline.area() == 8000.0
    assert outline.bbox() == (0.0, 0.0, 100.0, 80.0)


def test_area_exact_fractional_coordinates():
    # exact over the binary float coordinates actually supplied
    pts = [(0.1, 0.1), (10.3, 0.1), (10.3, 5.7), (0.1, 5.7)]
    outline = RectilinearOutline.from_points(pts)
    expected = (Fraction(10.3) - Fraction(0.1)) * (Fraction(5.7) - Fraction(0.1))
    assert outline.area_exact() == expected
    half = RectilinearOutline.from_points([(0.5, 0.5), (10.5, 0.5), (10.5, 4.5), (0.5, 4.5)])
    assert half.area_exact() == Fraction(40)  # 10 x 4, exactly representable


def test_clockwise_input_is_normalized_to_ccw():
    cw = list(reversed(LSHAPE))
    outline = RectilinearOutline.from_points(cw)
    assert outline.area() == 8400.0
    # shoelace of the stored ring must be positive (counter-clockwise)
    pts = outline.vertices
    shoelace = sum(pts[i][0] * pts[(i + 1) % len(pts)][1]
                   - pts[(i + 1) % len(pts)][0] * pts[i][1]
                   for i in range(len(pts)))
    assert shoelace > 0


def test_edges_alternate_and_close():
    for shape in ALL_SHAPES:
        outline = RectilinearOutline.from_points(shape)
        edges = outline.edges()
        assert len(edges) == len(outline.vertices)
        for i, ((x1, y1), (x2, y2)) in enumerate(edges):
            horizontal = y1 == y2
            assert horizontal or x1 == x2
            (nx1, ny1), (nx2, ny2) = edges[(i + 1) % len(edges)]
            assert (x2, y2) == (nx1, ny1)
            assert horizontal != (ny1 == ny2)  # orientation alternates


@pytest.mark.parametrize("pts,fragment", [
    ([(0, 0), (10, 0), (10, 10)], "at least 4"),
    ([(0, 0), (10, 0), (10, 10), (5, 10), (5, 5)], "even"),
    ([(0, 0), (10, 0), (10, 0), (10, 10), (0, 10), (0, 5)], "zero-length"),
    ([(0, 0), (10, 5), (10, 10), (0, 10)], "axis-aligned"),
    ([(0, 0), (5, 0), (10, 0), (10, 10), (5, 10), (0, 10)], "collinear"),
    # bowtie-like rectilinear ring that crosses itself
    ([(0, 0), (30, 0), (30, 30), (20, 30), (20, -10), (10, -10), (10, 20), (0, 20)],
     "intersect"),
])
def test_invalid_outlines_rejected(pts, fragment):
    with pytest.raises(GeometryError) as err:
        RectilinearOutline.from_points(pts)
    assert fragment in str(err.value)


def test_contains_point_matches_shapely_and_raycast():
    gen = Xoshiro256StarStar(1001)
    for shape in ALL_SHAPES:
        outline = RectilinearOutline.from_points(shape)
        poly = Polygon(shape)
        xmin, ymin, xmax, ymax = outline.bbox()
        for _ in range(400):
            x = gen.uniform(xmin - 10, xmax + 10)
            y = gen.uniform(ymin - 10, ymax + 10)
            got = outline.contains_point(x, y)
            assert got == poly.covers(Point(x, y))
            assert got == _raycast_inside(shape, x, y)


def test_contains_point_on_boundary_counts_inside():
    outline = RectilinearOutline.from_points(LSHAPE)
    assert outline.contains_point(0, 0)
    assert outline.contains_point(100, 30)
    assert outline.contains_point(60, 80)   # on the notch's vertical edge
    assert outline.contains_point(50, 0)
    assert not outline.contains_point(100.0001, 30)
    assert not outline.contains_point(61, 61)  # inside the notch cut


def test_contains_rect_matches_shapely_covers():
    gen = Xoshiro256StarStar(2002)
    for shape in ALL_SHAPES:
        outline = RectilinearOutline.from_points(shape)
        poly = Polygon(shape)
        xmin, ymin, xmax, ymax = outline.bbox()
        agree = 0
        for _ in range(400):
            x = gen.uniform(xmin - 15, xmax + 5)
            y = gen.uniform(ymin - 15, ymax + 5)
            w = gen.uniform(0.5, (xmax - xmin) * 0.6)
            h = gen.uniform(0.5, (ymax - ymin) * 0.6)
            got = outline.contains_rect(x, y, w, h)
            want = poly.covers(box(x, y, x + w, y + h))
            assert got == want
            agree += got
        assert 0 < agree < 400  # sample hit both outcomes


def test_contains_rect_flush_edges():
    outline = RectilinearOutline.from_points(LSHAPE)
    assert outline.contains_rect(0, 0, 100, 60)       # fills the fat arm exactly
    assert outline.contains_rect(0, 0, 60, 100)       # fills the tall arm exactly
    assert not outline.contains_rect(0, 0, 100, 60.01)
    assert not outline.contains_rect(59, 59, 2, 2)    # straddles the notch corner


def test_rects_overlap_strict_interior():
    assert rects_overlap((0, 0, 10, 10), (5, 5, 10, 10))
    assert not rects_overlap((0, 0, 10, 10), (10, 0, 10, 10))  # edge contact
    assert not rects_overlap((0, 0, 10, 10), (10, 10, 5, 5))   # corner contact
    assert not rects_overlap((0, 0, 10, 10), (11, 0, 5, 5))
    assert rects_overlap((0, 0, 10, 10), (2, 2, 2, 2))         # nested


def test_rects_overlap_matches_shapely_area():
    gen = Xoshiro256StarStar(3003)
    for _ in range(1000):
        a = (gen.uniform(0, 50), gen.uniform(0, 50), gen.uniform(1, 30), gen.uniform(1, 30))
        b = (gen.uniform(0, 50), gen.uniform(0, 50), gen.uniform(1, 30), gen.uniform(1, 30))
        want = box(a[0], a[1], a[0] + a[2], a[1] + a[3]).intersection(
            box(b[0], b[1], b[0] + b[2], b[1] + b[3])).area > 0
        assert rects_overlap(a, b) == want
