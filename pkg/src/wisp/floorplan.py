"""Floorplan domain model and JSON interchange.

A floorplan is a rectilinear die outline plus macro rectangles, soft cell
regions, and a netlist whose pins sit at macro-relative offsets or at fixed
points. All coordinates are microns with the origin at the lower left.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Any, Mapping, Sequence

from .geometry import GeometryError, RectilinearOutline, rects_overlap


class FloorplanError(ValueError):
    """Raised for structurally valid JSON that violates floorplan rules."""


class FloorplanParseError(FloorplanError):
    """Raised when floorplan JSON cannot be parsed or validated."""


@dataclass(frozen=True)
class MacroInstance:
    """Hard macro: axis-aligned rectangle anchored at its lower-left corner."""

    name: str
    x: float
    y: float
    w: float
    h: float
    movable: bool = True

    @property
    def center(self) -> tuple[float, float]:
        return self.x + self.w / 2.0, self.y + self.h / 2.0

    @property
    def rect(self) -> tuple[float, float, float, float]:
        return self.x, self.y, self.w, self.h


@dataclass(frozen=True)
class CellRegion:
    """Soft region of standard cells with a target utilization in [0, 1]."""

    x: float
    y: float
    w: float
    h: float
    utilization: float

    @property
    def rect(self) -> tuple[float, float, float, float]:
        return self.x, self.y, self.w, self.h


@dataclass(frozen=True)
class Pin:
    """Net pin: either macro-relative (offset from the macro's lower-left
    corner, center if no offset is given) or a fixed point."""

    macro: str | None = None
    dx: float | None = None
    dy: float | None = None
    x: float | None = None
    y: float | None = None

    def location(self, macros: Mapping[str, MacroInstance],
                 positions: Mapping[str, tuple[float, float]] | None = None) -> tuple[float, float]:
        if self.macro is None:
            assert self.x is not None and self.y is not None
            return self.x, self.y
        m = macros[self.macro]
        mx, my = (positions or {}).get(self.macro, (m.x, m.y))
        if self.dx is None:
            return mx + m.w / 2.0, my + m.h / 2.0
        assert self.dy is not None
        return mx + self.dx, my + self.dy


@dataclass(frozen=True)
class Net:
    name: str
    pins: tuple[Pin, ...]


@dataclass(frozen=True)
class Floorplan:
    name: str
    outline: RectilinearOutline
    macros: tuple[MacroInstance, ...]
    cells: tuple[CellRegion, ...]
    nets: tuple[Net, ...]
    has_macro_overlaps: bool = False

    @property
    def macro_map(self) -> dict[str, MacroInstance]:
        return {m.name: m for m in self.macros}


def _require(obj: Mapping[str, Any], key: str, ctx: str) -> Any:
    if key not in obj:
        raise FloorplanParseError(f"{ctx}: missing required field '{key}'")
    return obj[key]


def _number(value: Any, ctx: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise FloorplanParseError(f"{ctx}: expected a number, got {value!r}")
    return float(value)


def parse_floorplan(text: str) -> Floorplan:
    """Parse floorplan JSON, enforcing the geometric invariants.

    Macros and cells must lie fully inside the outline and have positive
    (cells: non-negative utilization <= 1) dimensions; net pins must resolve.
    Overlapping macros are allowed through with `has_macro_overlaps` set, so
    an illegal initial placement can still be loaded and repaired.
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FloorplanParseError(f"invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise FloorplanParseError("top-level JSON value must be an object")

    name = raw.get("name", "floorplan")
    if not isinstance(name, str):
        raise FloorplanParseError("'name' must be a string")
    outline_pts = _require(raw, "outline", "floorplan")
    if not isinstance(outline_pts, list):
        raise FloorplanParseError("'outline' must be a list of [x, y] pairs")
    for i, pt in enumerate(outline_pts):
        if not (isinstance(pt, list) and len(pt) == 2):
            raise FloorplanParseError(f"outline vertex {i} must be an [x, y] pair")
        _number(pt[0], f"outline vertex {i}")
        _number(pt[1], f"outline vertex {i}")
    try:
        outline = RectilinearOutline.from_points(outline_pts)
    except GeometryError as exc:
        raise FloorplanParseError(f"outline: {exc}") from exc

    macros: list[MacroInstance] = []
    seen: set[str] = set()
    for i, entry in enumerate(raw.get("macros", [])):
        ctx = f"macro {i}"
        if not isinstance(entry, dict):
            raise FloorplanParseError(f"{ctx}: expected an object")
        mname = _require(entry, "name", ctx)
        if not isinstance(mname, str) or not mname:
            raise FloorplanParseError(f"{ctx}: 'name' must be a non-empty string")
        if mname in seen:
            raise FloorplanParseError(f"duplicate macro name '{mname}'")
        seen.add(mname)
        x = _number(_require(entry, "x", ctx), ctx)
        y = _number(_require(entry, "y", ctx), ctx)
        w = _number(_require(entry, "w", ctx), ctx)
        h = _number(_require(entry, "h", ctx), ctx)
        if w <= 0 or h <= 0:
            raise FloorplanParseError(f"macro '{mname}': dimensions must be positive")
        movable = entry.get("movable", True)
        if not isinstance(movable, bool):
            raise FloorplanParseError(f"macro '{mname}': 'movable' must be a boolean")
        if not outline.contains_rect(x, y, w, h):
            raise FloorplanParseError(f"macro '{mname}' extends outside the outline")
        macros.append(MacroInstance(mname, x, y, w, h, movable))

    overlaps = any(
        rects_overlap(a.rect, b.rect)
        for i, a in enumerate(macros)
        for b in macros[i + 1:]
    )

    cells: list[CellRegion] = []
    for i, entry in enumerate(raw.get("cells", [])):
        ctx = f"cell region {i}"
        if not isinstance(entry, dict):
            raise FloorplanParseError(f"{ctx}: expected an object")
        x = _number(_require(entry, "x", ctx), ctx)
        y = _number(_require(entry, "y", ctx), ctx)
        w = _number(_require(entry, "w", ctx), ctx)
        h = _number(_require(entry, "h", ctx), ctx)
        util = _number(_require(entry, "util", ctx), ctx)
        if w <= 0 or h <= 0:
            raise FloorplanParseError(f"{ctx}: dimensions must be positive")
        if not 0.0 <= util <= 1.0:
            raise FloorplanParseError(f"{ctx}: utilization must be within [0, 1]")
        if not outline.contains_rect(x, y, w, h):
            raise FloorplanParseError(f"{ctx} extends outside the outline")
        cells.append(CellRegion(x, y, w, h, util))

    macro_names = {m.name for m in macros}
    nets: list[Net] = []
    for i, entry in enumerate(raw.get("nets", [])):
        ctx = f"net {i}"
        if not isinstance(entry, dict):
            raise FloorplanParseError(f"{ctx}: expected an object")
        nname = entry.get("name", f"net{i}")
        if not isinstance(nname, str):
            raise FloorplanParseError(f"{ctx}: 'name' must be a string")
        raw_pins = _require(entry, "pins", f"net '{nname}'")
        if not isinstance(raw_pins, list) or not raw_pins:
            raise FloorplanParseError(f"net '{nname}': needs at least one pin")
        pins: list[Pin] = []
        for j, p in enumerate(raw_pins):
            pctx = f"net '{nname}' pin {j}"
            if not isinstance(p, dict):
                raise FloorplanParseError(f"{pctx}: expected an object")
            if "macro" in p:
                ref = p["macro"]
                if ref not in macro_names:
                    raise FloorplanParseError(f"{pctx}: unknown macro '{ref}'")
                if ("dx" in p) != ("dy" in p):
                    raise FloorplanParseError(f"{pctx}: offset needs both dx and dy")
                dx = _number(p["dx"], pctx) if "dx" in p else None
                dy = _number(p["dy"], pctx) if "dy" in p else None
                pins.append(Pin(macro=ref, dx=dx, dy=dy))
            elif "x" in p and "y" in p:
                pins.append(Pin(x=_number(p["x"], pctx), y=_number(p["y"], pctx)))
            else:
                raise FloorplanParseError(
                    f"{pctx}: needs either a 'macro' reference or fixed 'x'/'y'")
        nets.append(Net(nname, tuple(pins)))

    return Floorplan(
        name=name,
        outline=outline,
        macros=tuple(macros),
        cells=tuple(cells),
        nets=tuple(nets),
        has_macro_overlaps=overlaps,
    )


def load_floorplan(path: str) -> Floorplan:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_floorplan(fh.read())


def serialize_floorplan(fp: Floorplan) -> str:
    """Emit floorplan JSON; parse(serialize(fp)) round-trips exactly."""
    doc: dict[str, Any] = {
        "name": fp.name,
        "outline": [[x, y] for x, y in fp.outline.vertices],
        "macros": [
            {"name": m.name, "x": m.x, "y": m.y, "w": m.w, "h": m.h, "movable": m.movable}
            for m in fp.macros
        ],
        "cells": [
            {"x": c.x, "y": c.y, "w": c.w, "h": c.h, "util": c.utilization}
            for c in fp.cells
        ],
        "nets": [
            {"name": n.name, "pins": [_pin_doc(p) for p in n.pins]}
            for n in fp.nets
        ],
    }
    return json.dumps(doc, indent=2)


def _pin_doc(pin: Pin) -> dict[str, Any]:
    if pin.macro is None:
        return {"x": pin.x, "y": pin.y}
    if pin.dx is None:
        return {"macro": pin.macro}
    return {"macro": pin.macro, "dx": pin.dx, "dy": pin.dy}


def hpwl(fp: Floorplan, positions: Mapping[str, tuple[float, float]] | None = None) -> float:
    """Total half-perimeter wirelength over all nets.

    `positions` overrides macro origins without mutating the floorplan;
    omitted macros keep their stored location. Single-pin nets contribute 0.
    """
    macros = fp.macro_map
    total = 0.0
    for net in fp.nets:
        xs: list[float] = []
        ys: list[float] = []
        for pin in net.pins:
            px, py = pin.location(macros, positions)
            xs.append(px)
            ys.append(py)
        total += (max(xs) - min(xs)) + (max(ys) - min(ys))
    return total


def apply_positions(fp: Floorplan, positions: Mapping[str, tuple[float, float]]) -> Floorplan:
    """Return a copy with macro origins replaced; geometry is not re-checked,
    so an out-of-outline move survives here and fails the legality check."""
    unknown = set(positions) - set(fp.macro_map)
    if unknown:
        raise FloorplanError(f"positions reference unknown macros: {sorted(unknown)}")
    moved = tuple(
        replace(m, x=positions[m.name][0], y=positions[m.name][1]) if m.name in positions else m
        for m in fp.macros
    )
    new_overlaps = any(
        rects_overlap(a.rect, b.rect)
        for i, a in enumerate(moved)
        for b in moved[i + 1:]
    )
    return replace(fp, macros=moved, has_macro_overlaps=new_overlaps)
