"""Direction-aware simulated annealing over macro positions.

Each proposal slides one macro a fixed pixel step along the most promising
compass direction, chosen by comparing mean scores inside four field-of-view
rectangles flush with the macro's sides. Probes that contain another macro or
leave the outline are blocked. Candidates are re-rendered and re-scored, and
accepted by the usual Metropolis rule on a cost that blends normalized
wirelength with the normalized whitespace score.
"""

from __future__ import annotations

import math
import statistics
import time
from dataclasses import dataclass

import numpy as np

from .floorplan import Floorplan, apply_positions, hpwl
from .geometry import rects_overlap
from .raster import Canvas, PixelClass, PixelGrid, pixel_span
from .rng import Xoshiro256StarStar
from .scoring import ScoreMap, build_score_map
from .segmentation import parse

DIRECTIONS = ("N", "E", "S", "W")
_DIR_VEC = {"N": (0.0, 1.0), "E": (1.0, 0.0), "S": (0.0, -1.0), "W": (-1.0, 0.0)}


class RefinementError(ValueError):
    """Raised for invalid configs, illegal initial placements, or baselines."""


@dataclass
class SaConfig:
    """Annealer knobs; defaults favor whitespace score over wirelength."""

    alpha: float = 0.05          # weight of normalized wirelength
    beta: float = 0.95           # weight of normalized whitespace score
    step_px: int = 10            # move quantum in pixels
    fov_depth_px: int = 100      # probe depth in pixels
    t0: float | None = None      # None -> calibrate from probe moves
    cooling: float = 0.95
    iters_per_temp: int | None = None  # None -> 4 * number of movable macros
    t_min: float = 1e-6
    max_iters: int = 1000
    seed: int = 0
    gamma: float = 0.8
    sigma_scale: float = 0.5
    area_min: int = 2000
    area_max: int = 20000
    max_side: int = 800
    rescore_every: int = 1       # re-label wasted regions every K proposals

    def validate(self) -> None:
        if abs(self.alpha + self.beta - 1.0) > 1e-9:
            raise RefinementError(
                f"alpha + beta must equal 1, got {self.alpha} + {self.beta}")
        if self.alpha < 0 or self.beta < 0:
            raise RefinementError("alpha and beta must be non-negative")
        if not 0.0 < self.cooling < 1.0:
            raise RefinementError(f"cooling must be in (0, 1), got {self.cooling}")
        if self.step_px < 1:
            raise RefinementError(f"step_px must be >= 1, got {self.step_px}")
        if self.fov_depth_px < 1:
            raise RefinementError(f"fov_depth_px must be >= 1, got {self.fov_depth_px}")
        if self.t0 is not None and self.t0 <= 0:
            raise RefinementError(f"t0 must be positive, got {self.t0}")
        if self.iters_per_temp is not None and self.iters_per_temp < 1:
            raise RefinementError("iters_per_temp must be >= 1")
        if self.t_min <= 0:
            raise RefinementError(f"t_min must be positive, got {self.t_min}")
        if self.max_iters < 0:
            raise RefinementError(f"max_iters must be >= 0, got {self.max_iters}")
        if self.rescore_every < 1:
            raise RefinementError(f"rescore_every must be >= 1, got {self.rescore_every}")
        if self.gamma < 0:
            raise RefinementError(f"gamma must be >= 0, got {self.gamma}")
        if self.sigma_scale <= 0:
            raise RefinementError(f"sigma_scale must be positive, got {self.sigma_scale}")
        if self.max_side < 1:
            raise RefinementError(f"max_side must be >= 1, got {self.max_side}")
        if self.area_min > self.area_max:
            raise RefinementError("area_min exceeds area_max")


@dataclass(frozen=True)
class FovProbe:
    """Mean-score probe of the rectangle flush against one macro side."""

    macro_index: int
    direction: str
    rect: tuple[int, int, int, int] | None  # r0, c0, r1, c1 after clipping
    density: float
    blocked: bool


@dataclass(frozen=True)
class CostBreakdown:
    wl_norm: float
    score_norm: float
    total: float


@dataclass(frozen=True)
class TraceEntry:
    iteration: int
    cost: float
    wl_norm: float
    score_norm: float
    accepted: bool
    macro: str
    direction: str  # "" when every direction was blocked


@dataclass
class RefinementResult:
    positions: dict[str, tuple[float, float]]
    initial: CostBreakdown
    final: CostBreakdown
    wasted_before: int
    wasted_after: int
    trace: list[TraceEntry]
    temperatures: list[float]
    iterations: int
    accepted: int
    seconds_parse: float = 0.0
    seconds_score: float = 0.0
    seconds_anneal: float = 0.0


def macro_footprint_px(grid: PixelGrid, macro_index: int) -> tuple[int, int, int, int] | None:
    """Inclusive (r0, c0, r1, c1) of the pixels a macro rectangle covers."""
    x, y, w, h = grid.macro_rects_px[macro_index]
    cspan = pixel_span(x, x + w, 1.0, grid.width)
    rspan = pixel_span(y, y + h, 1.0, grid.height)
    if cspan is None or rspan is None:
        return None
    return rspan[0], cspan[0], rspan[1], cspan[1]


def fov_probe(grid: PixelGrid, smap: ScoreMap, macro_index: int, direction: str,
              fov_depth_px: int = 100) -> FovProbe:
    """Probe the field-of-view rectangle on one side of a macro.

    The rectangle spans the macro's footprint along the shared side and
    extends `fov_depth_px` pixels outward, clipped to the canvas. It is
    blocked when it contains another macro's pixels or out-of-outline pixels,
    or when clipping leaves nothing to look at.
    """
    if direction not in DIRECTIONS:
        raise RefinementError(f"unknown direction {direction!r}")
    footprint = macro_footprint_px(grid, macro_index)
    if footprint is None:
        return FovProbe(macro_index, direction, None, 0.0, True)
    r0, c0, r1, c1 = footprint
    d = fov_depth_px
    if direction == "N":
        rr0, rr1, cc0, cc1 = r1 + 1, r1 + d, c0, c1
    elif direction == "S":
        rr0, rr1, cc0, cc1 = r0 - d, r0 - 1, c0, c1
    elif direction == "E":
        rr0, rr1, cc0, cc1 = r0, r1, c1 + 1, c1 + d
    else:
        rr0, rr1, cc0, cc1 = r0, r1, c0 - d, c0 - 1
    rr0, cc0 = max(rr0, 0), max(cc0, 0)
    rr1, cc1 = min(rr1, grid.height - 1), min(cc1, grid.width - 1)
    if rr1 < rr0 or cc1 < cc0:
        return FovProbe(macro_index, direction, None, 0.0, True)
    ids = grid.macro_id[rr0:rr1 + 1, cc0:cc1 + 1]
    cls = grid.classes[rr0:rr1 + 1, cc0:cc1 + 1]
    blocked = bool(((ids != -1) & (ids != macro_index)).any()
                   or (cls == PixelClass.OUTSIDE).any())
    density = float(smap.values[rr0:rr1 + 1, cc0:cc1 + 1].mean())
    return FovProbe(macro_index, direction, (rr0, cc0, rr1, cc1), density, blocked)


def choose_direction(probes: dict[str, FovProbe]) -> str | None:
    """Pick the unblocked direction with the highest density; ties resolve
    in N, E, S, W order. Returns None when everything is blocked."""
    best: FovProbe | None = None
    best_dir: str | None = None
    for d in DIRECTIONS:
        p = probes[d]
        if p.blocked:
            continue
        if best is None or p.density > best.density:
            best, best_dir = p, d
    return best_dir


def macro_order(grid: PixelGrid, smap: ScoreMap, fp: Floorplan,
                fov_depth_px: int = 100) -> list[int]:
    """Movable macro indices, busiest surroundings first.

    Rank key is the mean probe density over all four directions (blocked
    probes included at their clipped density); ties break by macro name.
    """
    keyed = []
    for idx, macro in enumerate(fp.macros):
        if not macro.movable:
            continue
        mean = sum(fov_probe(grid, smap, idx, d, fov_depth_px).density
                   for d in DIRECTIONS) / 4.0
        keyed.append((-mean, macro.name, idx))
    keyed.sort()
    return [idx for _, _, idx in keyed]


def is_legal(fp: Floorplan, positions: dict[str, tuple[float, float]] | None = None
             ) -> tuple[bool, list[str]]:
    """Check outline containment and pairwise macro disjointness.

    Exact float comparisons, closed containment: touching the outline or
    another macro is legal, crossing is not.
    """
    pos = {m.name: (m.x, m.y) for m in fp.macros}
    if positions:
        pos.update(positions)
    violations = []
    rects = []
    for m in fp.macros:
        x, y = pos[m.name]
        if not fp.outline.contains_rect(x, y, m.w, m.h):
            violations.append(f"macro '{m.name}' extends outside the outline")
        rects.append((m.name, (x, y, m.w, m.h)))
    for i, (name_a, rect_a) in enumerate(rects):
        for name_b, rect_b in rects[i + 1:]:
            if rects_overlap(rect_a, rect_b):
                violations.append(f"macros '{name_a}' and '{name_b}' overlap")
    return not violations, violations


def cost(wl: float, score: float, baseline_wl: float, baseline_score: float,
         alpha: float, beta: float) -> CostBreakdown:
    """Blend of wirelength and whitespace score, each normalized to its
    baseline. Baselines must be positive: cost is undefined otherwise."""
    if baseline_wl <= 0.0 or baseline_score <= 0.0:
        raise RefinementError("cost baselines must be positive")
    wl_norm = wl / baseline_wl
    score_norm = score / baseline_score
    return CostBreakdown(wl_norm, score_norm, alpha * wl_norm + beta * score_norm)


@dataclass
class _Eval:
    grid: PixelGrid
    wasted: np.ndarray
    smap: ScoreMap
    wl: float
    score: float
    wasted_fresh: bool
    parsed_wasted_px: int = 0


class Refiner:
    """Mutable annealing state over one floorplan.

    Splitting proposal generation from acceptance keeps each piece testable;
    `anneal` drives the whole loop.
    """

    def __init__(self, fp: Floorplan, config: SaConfig | None = None):
        self.config = config or SaConfig()
        self.config.validate()
        self.fp = fp
        self.movable = [i for i, m in enumerate(fp.macros) if m.movable]
        if not self.movable:
            raise RefinementError("no movable macros to refine")
        legal, violations = is_legal(fp)
        if not legal:
            raise RefinementError("initial placement is illegal: " + "; ".join(violations))
        self.canvas = Canvas.from_floorplan(fp, self.config.max_side)
        self.scale = self.canvas.scale
        self.seconds_parse = 0.0
        self.seconds_score = 0.0
        self._eval_count = 0

        self.positions = {m.name: (m.x, m.y) for m in fp.macros}
        first = self._evaluate(self.positions, advance_cadence=True)
        self.current = first
        self.wasted_before = first.parsed_wasted_px
        # Degenerate baselines (netless design, underflowed score) fall back
        # to 1.0 so normalization stays defined; cost() itself stays strict.
        self.baseline_wl = first.wl if first.wl > 0.0 else 1.0
        self.baseline_score = first.score if first.score > 0.0 else 1.0
        self.breakdown = self._cost_of(first)
        self.initial_breakdown = self.breakdown
        self.best_positions = dict(self.positions)
        self.best_breakdown = self.breakdown

    def _cost_of(self, ev: _Eval) -> CostBreakdown:
        return cost(ev.wl, ev.score, self.baseline_wl, self.baseline_score,
                    self.config.alpha, self.config.beta)

    def _evaluate(self, positions: dict[str, tuple[float, float]], *,
                  advance_cadence: bool) -> _Eval:
        cfg = self.config
        moved = apply_positions(self.fp, positions)
        grid = self.canvas.paint(moved.macros)
        if advance_cadence:
            do_parse = self._eval_count % cfg.rescore_every == 0
            self._eval_count += 1
        else:
            do_parse = True
        parsed_px = 0
        if do_parse:
            t0 = time.perf_counter()
            parsed = parse(grid, area_min=cfg.area_min, area_max=cfg.area_max)
            self.seconds_parse += time.perf_counter() - t0
            wasted = parsed.wasted
            parsed_px = int(wasted.sum())
        else:
            wasted = self.current.wasted  # stale labels until the next rescan
        t0 = time.perf_counter()
        smap = build_score_map(grid, wasted, gamma=cfg.gamma, sigma_scale=cfg.sigma_scale)
        score = smap.total()
        self.seconds_score += time.perf_counter() - t0
        wl = hpwl(self.fp, positions)
        return _Eval(grid, wasted, smap, wl, score, do_parse, parsed_px)

    def propose(self, macro_index: int) -> tuple[str | None, dict[str, tuple[float, float]] | None]:
        """Direction and candidate positions for one macro, or (None, None)
        when every field of view is blocked."""
        probes = {d: fov_probe(self.current.grid, self.current.smap, macro_index,
                               d, self.config.fov_depth_px) for d in DIRECTIONS}
        direction = choose_direction(probes)
        if direction is None:
            return None, None
        name = self.fp.macros[macro_index].name
        dx, dy = _DIR_VEC[direction]
        step_um = self.config.step_px * self.scale
        x, y = self.positions[name]
        candidate = dict(self.positions)
        candidate[name] = (x + dx * step_um, y + dy * step_um)
        return direction, candidate

    def calibrate_t0(self, movable: list[int]) -> float:
        """Starting temperature from the uphill cost deltas of 50 random
        legal probe moves: median positive delta scaled so such a move is
        accepted with probability one half. Falls back to 1e-3 when no
        probe goes uphill."""
        rng = Xoshiro256StarStar(self.config.seed ^ 0x9E3779B97F4A7C15)
        deltas = []
        step_um = self.config.step_px * self.scale
        for _ in range(50):
            idx = movable[rng.randrange(len(movable))]
            direction = DIRECTIONS[rng.randrange(4)]
            name = self.fp.macros[idx].name
            dx, dy = _DIR_VEC[direction]
            x, y = self.positions[name]
            candidate = dict(self.positions)
            candidate[name] = (x + dx * step_um, y + dy * step_um)
            legal, _ = is_legal(self.fp, candidate)
            if not legal:
                continue
            ev = self._evaluate(candidate, advance_cadence=False)
            delta = self._cost_of(ev).total - self.breakdown.total
            if delta > 0.0:
                deltas.append(delta)
        if not deltas:
            return 1e-3
        return statistics.median(deltas) / math.log(2.0)

    def run(self) -> RefinementResult:
        cfg = self.config
        rng = Xoshiro256StarStar(cfg.seed)
        iters_per_temp = cfg.iters_per_temp or 4 * len(self.movable)
        trace: list[TraceEntry] = []
        temperatures: list[float] = []
        accepted_total = 0
        iteration = 0

        temp = cfg.t0
        if temp is None:
            temp = self.calibrate_t0(self.movable) if cfg.max_iters > 0 else 1e-3

        zero_accept_streak = 0
        while iteration < cfg.max_iters and temp >= cfg.t_min:
            temperatures.append(temp)
            order = macro_order(self.current.grid, self.current.smap, self.fp,
                                cfg.fov_depth_px)
            accepted_this_temp = 0
            for slot in range(iters_per_temp):
                if iteration >= cfg.max_iters:
                    break
                macro_index = order[slot % len(order)]
                name = self.fp.macros[macro_index].name
                direction, candidate = self.propose(macro_index)
                if direction is None:
                    trace.append(TraceEntry(iteration, self.breakdown.total,
                                            self.breakdown.wl_norm,
                                            self.breakdown.score_norm,
                                            False, name, ""))
                    iteration += 1
                    continue
                legal, _ = is_legal(self.fp, candidate)
                if not legal:
                    trace.append(TraceEntry(iteration, self.breakdown.total,
                                            self.breakdown.wl_norm,
                                            self.breakdown.score_norm,
                                            False, name, direction))
                    iteration += 1
                    continue
                ev = self._evaluate(candidate, advance_cadence=True)
                breakdown = self._cost_of(ev)
                delta = breakdown.total - self.breakdown.total
                accept = delta <= 0.0 or rng.random() < math.exp(-delta / temp)
                trace.append(TraceEntry(iteration, breakdown.total, breakdown.wl_norm,
                                        breakdown.score_norm, accept, name, direction))
                if accept:
                    self.positions = candidate
                    self.current = ev
                    self.breakdown = breakdown
                    accepted_total += 1
                    accepted_this_temp += 1
                    if breakdown.total < self.best_breakdown.total:
                        self.best_breakdown = breakdown
                        self.best_positions = dict(candidate)
                iteration += 1
            if accepted_this_temp == 0:
                zero_accept_streak += 1
                if zero_accept_streak >= 3:
                    break
            else:
                zero_accept_streak = 0
            temp *= cfg.cooling

        final_eval = self._evaluate(self.best_positions, advance_cadence=False)
        final = self._cost_of(final_eval)
        return RefinementResult(
            positions=dict(self.best_positions),
            initial=self.initial_breakdown,
            final=final,
            wasted_before=self.wasted_before,
            wasted_after=final_eval.parsed_wasted_px,
            trace=trace,
            temperatures=temperatures,
            iterations=iteration,
            accepted=accepted_total,
            seconds_parse=self.seconds_parse,
            seconds_score=self.seconds_score,
        )


def anneal(fp: Floorplan, config: SaConfig | None = None) -> RefinementResult:
    """Refine macro positions; returns the best placement seen plus a full
    proposal trace and per-category timing."""
    t_start = time.perf_counter()
    refiner = Refiner(fp, config)
    result = refiner.run()
    wall = time.perf_counter() - t_start
    result.seconds_anneal = max(0.0, wall - result.seconds_parse - result.seconds_score)
    return result
