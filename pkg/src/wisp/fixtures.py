"""Synthetic floorplan generation for tests and benchmarks.

Generated plans are legal by construction: macros are rejection-sampled
until they fit inside the outline without overlapping, one cell region sits
in a part of the die guaranteed to exist for the chosen outline shape, and
every net pin resolves. The same (kind, macro_count, seed) triple always
yields the identical floorplan.
"""

from __future__ import annotations

from .floorplan import CellRegion, Floorplan, MacroInstance, Net, Pin
from .geometry import RectilinearOutline, rects_overlap
from .rng import Xoshiro256StarStar

KINDS = ("rect", "lshape", "zshape")

_WIDTH = 1000.0
_HEIGHT = 800.0
_PLACE_ATTEMPTS = 1000


class FixtureError(ValueError):
    """Raised when generation parameters cannot produce a legal plan."""


def _outline_points(kind: str, rng: Xoshiro256StarStar) -> list[list[float]]:
    w, h = _WIDTH, _HEIGHT
    if kind == "rect":
        return [[0.0, 0.0], [w, 0.0], [w, h], [0.0, h]]
    if kind == "lshape":
        # notch out the top-right quadrant: 6 vertices, one reflex corner
        xc = round(w * rng.uniform(0.5, 0.7), 1)
        yc = round(h * rng.uniform(0.5, 0.7), 1)
        return [[0.0, 0.0], [w, 0.0], [w, yc], [xc, yc], [xc, h], [0.0, h]]
    if kind == "zshape":
        # notches at top-right and bottom-left: 8 vertices, two reflex corners
        xtr = round(w * rng.uniform(0.55, 0.75), 1)
        ytr = round(h * rng.uniform(0.55, 0.75), 1)
        xbl = round(w * rng.uniform(0.2, 0.35), 1)
        ybl = round(h * rng.uniform(0.2, 0.35), 1)
        return [[xbl, 0.0], [w, 0.0], [w, ytr], [xtr, ytr], [xtr, h],
                [0.0, h], [0.0, ybl], [xbl, ybl]]
    raise FixtureError(f"unknown fixture kind {kind!r}; pick one of {KINDS}")


def _cell_region(kind: str, points: list[list[float]],
                 rng: Xoshiro256StarStar) -> CellRegion:
    w, h = _WIDTH, _HEIGHT
    util = round(rng.uniform(0.6, 0.9), 2)
    if kind == "rect":
        return CellRegion(w * 0.05, h * 0.05, w * 0.5, h * 0.35, util)
    if kind == "lshape":
        yc = points[2][1]
        return CellRegion(w * 0.05, h * 0.05, w * 0.5, yc * 0.6, util)
    # zshape: the horizontal band between the two notch heights always exists
    ytr = points[2][1]
    xtr = points[3][0]
    ybl = points[7][1]
    return CellRegion(xtr * 0.08, ybl + (ytr - ybl) * 0.1,
                      xtr * 0.5, (ytr - ybl) * 0.6, util)


def gen_fixture(kind: str, macro_count: int, seed: int = 0) -> Floorplan:
    """Generate a legal synthetic floorplan.

    kind: "rect", "lshape" (6-vertex outline) or "zshape" (8-vertex outline
    with two reflex corners). Raises FixtureError when macros cannot be
    placed without overlap within the attempt budget.
    """
    if macro_count < 0:
        raise FixtureError(f"macro_count must be >= 0, got {macro_count}")
    rng = Xoshiro256StarStar(seed)
    points = _outline_points(kind, rng)
    outline = RectilinearOutline.from_points(points)
    cell = _cell_region(kind, points, rng)
    if not outline.contains_rect(*cell.rect):
        raise FixtureError("generated cell region escaped the outline")

    macros: list[MacroInstance] = []
    for i in range(macro_count):
        placed = False
        for _ in range(_PLACE_ATTEMPTS):
            mw = round(rng.uniform(0.06, 0.15) * _WIDTH, 1)
            mh = round(rng.uniform(0.06, 0.15) * _HEIGHT, 1)
            mx = round(rng.uniform(0.0, _WIDTH - mw), 1)
            my = round(rng.uniform(0.0, _HEIGHT - mh), 1)
            rect = (mx, my, mw, mh)
            if not outline.contains_rect(*rect):
                continue
            if any(rects_overlap(rect, m.rect) for m in macros):
                continue
            macros.append(MacroInstance(f"m{i}", mx, my, mw, mh, movable=True))
            placed = True
            break
        if not placed:
            raise FixtureError(
                f"could not place macro {i} of {macro_count} after "
                f"{_PLACE_ATTEMPTS} attempts (seed {seed}, kind {kind})")

    nets: list[Net] = []
    if macros:
        for i in range(max(1, 2 * macro_count)):
            pin_count = 2 + rng.randrange(3)
            pins = []
            for _ in range(pin_count):
                if rng.random() < 0.15:
                    px, py = _interior_point(outline, rng)
                    pins.append(Pin(x=px, y=py))
                else:
                    pins.append(Pin(macro=macros[rng.randrange(len(macros))].name))
            nets.append(Net(f"n{i}", tuple(pins)))

    return Floorplan(
        name=f"{kind}_{macro_count}m_s{seed}",
        outline=outline,
        macros=tuple(macros),
        cells=(cell,),
        nets=tuple(nets),
    )


def _interior_point(outline: RectilinearOutline,
                    rng: Xoshiro256StarStar) -> tuple[float, float]:
    x0, y0, w, h = outline.bbox()
    for _ in range(_PLACE_ATTEMPTS):
        x = round(rng.uniform(x0, x0 + w), 1)
        y = round(rng.uniform(y0, y0 + h), 1)
        if outline.contains_point(x, y):
            return x, y
    raise FixtureError("could not sample an interior point")
