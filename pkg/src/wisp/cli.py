"""Command line front end.

Subcommands mirror the library stages: diagnose (masks + wasted regions),
score (mixture heatmap), refine (annealer), recycle (outline trim), run
(the full chain), plus sweep, render and gen-fixture utilities. Artifact
files are deterministic for a given input and seed; wall-clock timing is
reported per category on stdout only, so identical runs produce identical
artifacts.

Exit codes: 0 on success, 1 when a stage rejects its input, 2 for usage
errors (bad flags, missing input file, alpha + beta != 1).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import dataclass

import numpy as np
from PIL import Image

from .fixtures import FixtureError, gen_fixture
from .floorplan import (Floorplan, FloorplanError, apply_positions, hpwl,
                        parse_floorplan, serialize_floorplan)
from .geometry import GeometryError
from .raster import (PixelGrid, RasterError, rasterize, render_rgb, write_mask_png,
                     write_png, write_ppm)
from .recycling import ReclaimError, reclaim_candidates, trim_outline
from .refinement import RefinementError, SaConfig, anneal
from .scoring import ScoreMap, ScoringError, build_score_map, total_score
from .segmentation import (ParsedMasks, SegmentationError, canny_edges, parse,
                           right_angle_corners)

_STAGE_ERRORS = (FloorplanError, GeometryError, RasterError, SegmentationError,
                 ScoringError, RefinementError, ReclaimError, FixtureError)


@dataclass
class Timing:
    """Wall-clock seconds per pipeline category."""

    load: float = 0.0
    parse: float = 0.0
    score: float = 0.0
    anneal: float = 0.0

    @property
    def total(self) -> float:
        return self.load + self.parse + self.score + self.anneal

    def as_dict(self) -> dict[str, float]:
        return {"load": self.load, "parse": self.parse, "score": self.score,
                "anneal": self.anneal, "total": self.total}

    def line(self) -> str:
        return ("timing [s]  load={load:.3f}  parse={parse:.3f}  "
                "score={score:.3f}  anneal={anneal:.3f}  total={total:.3f}"
                ).format(**self.as_dict())


def _load(path: str, timing: Timing) -> Floorplan:
    t0 = time.perf_counter()
    with open(path, "r", encoding="utf-8") as fh:
        fp = parse_floorplan(fh.read())
    timing.load += time.perf_counter() - t0
    return fp


def _ensure_out(args) -> str:
    os.makedirs(args.out, exist_ok=True)
    return args.out


def _write_json(path: str, doc) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


# ---------------------------------------------------------------- stages


def _diagnose_stage(fp: Floorplan, args, timing: Timing) -> tuple[PixelGrid, ParsedMasks, dict]:
    t0 = time.perf_counter()
    grid = rasterize(fp, args.max_side)
    parsed = parse(grid, area_min=args.area_min, area_max=args.area_max)
    timing.parse += time.perf_counter() - t0
    summary = {
        "width": grid.width,
        "height": grid.height,
        "scale_um_per_px": grid.scale,
        "regions": len(parsed.regions.regions),
        "wasted_regions": len(parsed.wasted_regions),
        "wasted_px": int(parsed.wasted.sum()),
        "unmatched_px": parsed.unmatched_px,
    }
    return grid, parsed, summary


def _write_diagnose(out: str, grid: PixelGrid, parsed: ParsedMasks, args) -> None:
    write_mask_png(os.path.join(out, "mask_macro.png"), parsed.macro)
    write_mask_png(os.path.join(out, "mask_cell.png"), parsed.cell)
    write_mask_png(os.path.join(out, "mask_whitespace.png"), parsed.whitespace_clean)
    write_mask_png(os.path.join(out, "mask_wasted.png"), parsed.wasted)
    rgb = render_rgb(grid)
    overlay = rgb.copy()
    overlay[parsed.wasted] = (255, 160, 0)
    write_png(os.path.join(out, "overlay.png"), overlay)
    edges = canny_edges(rgb, 50.0, 150.0)
    corners = right_angle_corners(edges)
    write_mask_png(os.path.join(out, "edges.png"), edges)
    doc = {
        "width": grid.width,
        "height": grid.height,
        "scale_um_per_px": grid.scale,
        "area_min_px": args.area_min,
        "area_max_px": args.area_max,
        "wasted_px": int(parsed.wasted.sum()),
        "edge_px": int(edges.sum()),
        "right_angle_corners": len(corners),
        "regions": [
            {
                "id": r.id,
                "area_px": r.area_px,
                "area_um2": r.area_px * grid.scale * grid.scale,
                "bbox": list(r.bbox),
                "touches_macro": r.touches_dilated_macro,
                "wasted": r.wasted,
            }
            for r in parsed.regions.regions
        ],
    }
    _write_json(os.path.join(out, "wasted_regions.json"), doc)


def _score_stage(grid: PixelGrid, parsed: ParsedMasks, args,
                 timing: Timing) -> tuple[ScoreMap, dict]:
    t0 = time.perf_counter()
    smap = build_score_map(grid, parsed.wasted, gamma=args.gamma,
                           sigma_scale=args.sigma_scale)
    total = total_score(smap)
    timing.score += time.perf_counter() - t0
    return smap, {"total_score": total}


def _false_color(values: np.ndarray, domain: np.ndarray) -> np.ndarray:
    out = np.full(values.shape + (3,), 40, dtype=np.uint8)
    if domain.any():
        vals = values[domain]
        lo, hi = float(vals.min()), float(vals.max())
        norm = np.zeros_like(values)
        if hi > lo:
            norm = np.clip((values - lo) / (hi - lo), 0.0, 1.0)
        stops = np.array([0.0, 0.25, 0.5, 0.75, 1.0])
        r = np.interp(norm, stops, [0, 0, 0, 255, 255])
        g = np.interp(norm, stops, [0, 64, 255, 255, 32])
        b = np.interp(norm, stops, [64, 255, 128, 0, 16])
        rgb = np.stack([r, g, b], axis=-1).astype(np.uint8)
        out[domain] = rgb[domain]
    return out


def _write_score(out: str, grid: PixelGrid, smap: ScoreMap, total: float, args) -> None:
    np.savetxt(os.path.join(out, "score_map.csv"), smap.values[::-1],
               fmt="%.9g", delimiter=",")
    Image.fromarray(_false_color(smap.values, smap.domain)[::-1], mode="RGB").save(
        os.path.join(out, "score_map.png"), format="PNG")
    _write_json(os.path.join(out, "score.json"), {
        "total_score": total,
        "gamma": args.gamma,
        "sigma_scale": args.sigma_scale,
        "domain_px": int(smap.domain.sum()),
    })


def _sa_config(args) -> SaConfig:
    return SaConfig(
        alpha=args.alpha, beta=args.beta, step_px=args.step,
        fov_depth_px=args.fov_depth, t0=args.t0, cooling=args.cooling,
        iters_per_temp=args.iters_per_temp, t_min=args.t_min,
        max_iters=args.max_iters, seed=args.seed, gamma=args.gamma,
        sigma_scale=args.sigma_scale, area_min=args.area_min,
        area_max=args.area_max, max_side=args.max_side,
        rescore_every=args.rescore_every,
    )


def _refine_stage(fp: Floorplan, args, timing: Timing):
    result = anneal(fp, _sa_config(args))
    timing.parse += result.seconds_parse
    timing.score += result.seconds_score
    timing.anneal += result.seconds_anneal
    refined = apply_positions(fp, result.positions)
    summary = {
        "initial_cost": result.initial.total,
        "final_cost": result.final.total,
        "wl_norm": result.final.wl_norm,
        "score_norm": result.final.score_norm,
        "hpwl_initial": hpwl(fp),
        "hpwl_final": hpwl(refined),
        "wasted_before": result.wasted_before,
        "wasted_after": result.wasted_after,
        "iterations": result.iterations,
        "accepted": result.accepted,
        "temperatures": len(result.temperatures),
    }
    return result, refined, summary


def _write_refine(out: str, fp: Floorplan, refined: Floorplan, result, args) -> None:
    with open(os.path.join(out, "refined.json"), "w", encoding="utf-8") as fh:
        fh.write(serialize_floorplan(refined))
        fh.write("\n")
    with open(os.path.join(out, "trace.csv"), "w", encoding="utf-8") as fh:
        fh.write("iteration,cost,wl_norm,score_norm,accepted,macro,direction\n")
        for t in result.trace:
            fh.write(f"{t.iteration},{t.cost!r},{t.wl_norm!r},{t.score_norm!r},"
                     f"{int(t.accepted)},{t.macro},{t.direction}\n")
    write_png(os.path.join(out, "before.png"), render_rgb(rasterize(fp, args.max_side)))
    write_png(os.path.join(out, "after.png"), render_rgb(rasterize(refined, args.max_side)))
    _write_json(os.path.join(out, "refine.json"), {
        "initial": {"wl_norm": result.initial.wl_norm,
                    "score_norm": result.initial.score_norm,
                    "total": result.initial.total},
        "final": {"wl_norm": result.final.wl_norm,
                  "score_norm": result.final.score_norm,
                  "total": result.final.total},
        "wasted_before": result.wasted_before,
        "wasted_after": result.wasted_after,
        "iterations": result.iterations,
        "accepted": result.accepted,
        "temperatures": result.temperatures,
        "positions": {name: list(pos) for name, pos in sorted(result.positions.items())},
    })


def _recycle_stage(fp: Floorplan, args, timing: Timing):
    grid, parsed, _ = _diagnose_stage(fp, args, timing)
    smap, _ = _score_stage(grid, parsed, args, timing)
    strips = reclaim_candidates(grid, smap, parsed, args.tau, args.min_depth)
    plan = trim_outline(fp, strips)
    trimmed = Floorplan(name=fp.name, outline=plan.outline, macros=fp.macros,
                        cells=fp.cells, nets=fp.nets,
                        has_macro_overlaps=fp.has_macro_overlaps)
    summary = {
        "strips": len(plan.strips),
        "area_before_um2": plan.area_before,
        "area_after_um2": plan.area_after,
        "delta_area_um2": plan.delta_area,
        "delta_fraction": plan.delta_fraction,
    }
    return plan, trimmed, grid, summary


def _write_recycle(out: str, plan, trimmed: Floorplan, grid: PixelGrid, args) -> None:
    with open(os.path.join(out, "trimmed.json"), "w", encoding="utf-8") as fh:
        fh.write(serialize_floorplan(trimmed))
        fh.write("\n")
    overlay = render_rgb(grid)
    rr, cc = np.mgrid[0:grid.height, 0:grid.width]
    hatch = (rr + cc) % 6 < 2
    for s in plan.strips:
        (r0, r1), (c0, c1) = s.rows, s.cols
        band = np.zeros_like(hatch)
        band[r0:r1 + 1, c0:c1 + 1] = True
        overlay[band & hatch] = (220, 30, 30)
    write_png(os.path.join(out, "recycle_overlay.png"), overlay)
    _write_json(os.path.join(out, "reclaim_plan.json"), {
        "tau_percentile": args.tau,
        "min_depth_px": args.min_depth,
        "strips": [
            {"edge": s.edge_index, "direction": s.direction, "depth_px": s.depth_px,
             "rows": list(s.rows), "cols": list(s.cols), "rect_um": list(s.rect_um)}
            for s in plan.strips
        ],
        "area_before_um2": plan.area_before,
        "area_after_um2": plan.area_after,
        "delta_area_um2": plan.delta_area,
        "delta_fraction": plan.delta_fraction,
    })


def _finish(args, summary: dict, timing: Timing) -> int:
    if args.json_summary:
        doc = dict(summary)
        doc["timing"] = timing.as_dict()
        print(json.dumps(doc, indent=2))
    else:
        for key, value in summary.items():
            print(f"{key}: {value}")
        print(timing.line())
    return 0


# ---------------------------------------------------------------- commands


def cmd_diagnose(args) -> int:
    timing = Timing()
    fp = _load(args.floorplan, timing)
    out = _ensure_out(args)
    grid, parsed, summary = _diagnose_stage(fp, args, timing)
    _write_diagnose(out, grid, parsed, args)
    return _finish(args, summary, timing)


def cmd_score(args) -> int:
    timing = Timing()
    fp = _load(args.floorplan, timing)
    out = _ensure_out(args)
    grid, parsed, summary = _diagnose_stage(fp, args, timing)
    smap, score_summary = _score_stage(grid, parsed, args, timing)
    summary.update(score_summary)
    _write_score(out, grid, smap, score_summary["total_score"], args)
    return _finish(args, summary, timing)


def cmd_refine(args) -> int:
    timing = Timing()
    fp = _load(args.floorplan, timing)
    out = _ensure_out(args)
    result, refined, summary = _refine_stage(fp, args, timing)
    _write_refine(out, fp, refined, result, args)
    return _finish(args, summary, timing)


def cmd_recycle(args) -> int:
    timing = Timing()
    fp = _load(args.floorplan, timing)
    out = _ensure_out(args)
    plan, trimmed, grid, summary = _recycle_stage(fp, args, timing)
    _write_recycle(out, plan, trimmed, grid, args)
    return _finish(args, summary, timing)


def cmd_run(args) -> int:
    timing = Timing()
    fp = _load(args.floorplan, timing)
    out = _ensure_out(args)
    grid, parsed, summary = _diagnose_stage(fp, args, timing)
    _write_diagnose(out, grid, parsed, args)
    smap, score_summary = _score_stage(grid, parsed, args, timing)
    summary.update(score_summary)
    _write_score(out, grid, smap, score_summary["total_score"], args)
    result, refined, refine_summary = _refine_stage(fp, args, timing)
    summary.update(refine_summary)
    _write_refine(out, fp, refined, result, args)
    if args.recycle:
        plan, trimmed, recycle_grid, recycle_summary = _recycle_stage(refined, args, timing)
        summary.update(recycle_summary)
        _write_recycle(out, plan, trimmed, recycle_grid, args)
    return _finish(args, summary, timing)


def cmd_sweep(args) -> int:
    timing = Timing()
    fp = _load(args.floorplan, timing)
    out = _ensure_out(args)
    try:
        alphas = [float(a) for a in args.alphas.split(",") if a.strip()]
    except ValueError:
        print("error: --alphas must be a comma-separated list of numbers",
              file=sys.stderr)
        return 2
    if not alphas:
        print("error: --alphas is empty", file=sys.stderr)
        return 2
    reference_alpha = 0.05
    if reference_alpha not in alphas:
        alphas.insert(0, reference_alpha)

    rows = []
    reference_cost = None
    for alpha in alphas:
        sweep_args = argparse.Namespace(**vars(args))
        sweep_args.alpha = alpha
        sweep_args.beta = 1.0 - alpha
        result, _, _ = _refine_stage(fp, sweep_args, timing)
        rows.append((alpha, 1.0 - alpha, result))
        if alpha == reference_alpha:
            reference_cost = result.final.total
    lines = ["alpha,beta,final_cost,normalized,wl_norm,score_norm,accepted,iterations"]
    for alpha, beta, result in rows:
        normalized = result.final.total / reference_cost
        lines.append(f"{alpha!r},{beta!r},{result.final.total!r},{normalized!r},"
                     f"{result.final.wl_norm!r},{result.final.score_norm!r},"
                     f"{result.accepted},{result.iterations}")
    with open(os.path.join(out, "sweep.csv"), "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    summary = {"runs": len(rows), "reference_alpha": reference_alpha,
               "reference_cost": reference_cost}
    if not args.json_summary:
        for line in lines:
            print(line)
    return _finish(args, summary, timing)


def cmd_render(args) -> int:
    timing = Timing()
    fp = _load(args.floorplan, timing)
    out = _ensure_out(args)
    t0 = time.perf_counter()
    grid = rasterize(fp, args.max_side)
    rgb = render_rgb(grid)
    timing.parse += time.perf_counter() - t0
    write_png(os.path.join(out, "render.png"), rgb)
    write_ppm(os.path.join(out, "render.ppm"), rgb)
    summary = {"width": grid.width, "height": grid.height,
               "scale_um_per_px": grid.scale}
    return _finish(args, summary, timing)


def cmd_gen_fixture(args) -> int:
    timing = Timing()
    out = _ensure_out(args)
    t0 = time.perf_counter()
    fp = gen_fixture(args.kind, args.macros, args.seed)
    timing.load += time.perf_counter() - t0
    path = os.path.join(out, f"{fp.name}.json")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_floorplan(fp))
        fh.write("\n")
    summary = {"path": path, "name": fp.name, "macros": len(fp.macros),
               "nets": len(fp.nets)}
    return _finish(args, summary, timing)


# ---------------------------------------------------------------- parser


def _add_diagnose_flags(p) -> None:
    p.add_argument("--area-min", type=int, default=2000,
                   help="smallest wasted region area in px^2 (default 2000)")
    p.add_argument("--area-max", type=int, default=20000,
                   help="largest wasted region area in px^2 (default 20000)")


def _add_score_flags(p) -> None:
    p.add_argument("--gamma", type=float, default=0.8,
                   help="wasted-pixel score boost (default 0.8)")
    p.add_argument("--sigma-scale", type=float, default=0.5,
                   help="sigma as a fraction of macro size (default 0.5)")


def _add_refine_flags(p, with_weights: bool = True) -> None:
    if with_weights:
        p.add_argument("--alpha", type=float, default=0.05,
                       help="wirelength weight (default 0.05)")
        p.add_argument("--beta", type=float, default=0.95,
                       help="whitespace score weight (default 0.95)")
    p.add_argument("--step", type=int, default=10,
                   help="move distance per proposal in px (default 10)")
    p.add_argument("--fov-depth", type=int, default=100,
                   help="probe depth beyond a macro edge in px (default 100)")
    p.add_argument("--t0", type=float, default=None,
                   help="starting temperature (default: calibrated)")
    p.add_argument("--cooling", type=float, default=0.95)
    p.add_argument("--iters-per-temp", type=int, default=None)
    p.add_argument("--t-min", type=float, default=1e-6)
    p.add_argument("--max-iters", type=int, default=1000)
    p.add_argument("--rescore-every", type=int, default=1,
                   help="re-label wasted regions every K proposals (default 1)")


def _add_recycle_flags(p) -> None:
    p.add_argument("--tau", type=float, default=25.0,
                   help="score percentile for reclaimable pixels (default 25)")
    p.add_argument("--min-depth", type=int, default=5,
                   help="minimum strip depth in px (default 5)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wisp",
        description="Whitespace diagnosis and macro placement refinement "
                    "for rectilinear floorplans.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default="wisp_out", help="output directory")
    common.add_argument("--max-side", type=int, default=800,
                        help="pixels on the longest outline side (default 800)")
    common.add_argument("--seed", type=int, default=0, help="random seed")
    common.add_argument("--json-summary", action="store_true",
                        help="print a JSON summary instead of text")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("diagnose", parents=[common],
                       help="find wasted whitespace regions")
    p.add_argument("floorplan")
    _add_diagnose_flags(p)
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("score", parents=[common],
                       help="build the whitespace score map")
    p.add_argument("floorplan")
    _add_diagnose_flags(p)
    _add_score_flags(p)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("refine", parents=[common],
                       help="refine macro positions by annealing")
    p.add_argument("floorplan")
    _add_diagnose_flags(p)
    _add_score_flags(p)
    _add_refine_flags(p)
    p.set_defaults(func=cmd_refine)

    p = sub.add_parser("recycle", parents=[common],
                       help="propose outline trims over cheap whitespace")
    p.add_argument("floorplan")
    _add_diagnose_flags(p)
    _add_score_flags(p)
    _add_recycle_flags(p)
    p.set_defaults(func=cmd_recycle)

    p = sub.add_parser("run", parents=[common],
                       help="diagnose, score and refine in one pass")
    p.add_argument("floorplan")
    _add_diagnose_flags(p)
    _add_score_flags(p)
    _add_refine_flags(p)
    _add_recycle_flags(p)
    p.add_argument("--recycle", action="store_true",
                   help="also trim the outline after refinement")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", parents=[common],
                       help="anneal across alpha/beta blends")
    p.add_argument("floorplan")
    p.add_argument("--alphas", default="0.05,0.25,0.5,0.75,0.95",
                   help="comma-separated wirelength weights")
    _add_diagnose_flags(p)
    _add_score_flags(p)
    _add_refine_flags(p, with_weights=False)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("render", parents=[common],
                       help="rasterize a floorplan to PNG and PPM")
    p.add_argument("floorplan")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("gen-fixture", parents=[common],
                       help="generate a synthetic floorplan")
    p.add_argument("--kind", choices=("rect", "lshape", "zshape"), default="rect")
    p.add_argument("--macros", type=int, default=8)
    p.set_defaults(func=cmd_gen_fixture)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors, 0 on --help
        return int(exc.code or 0)
    if hasattr(args, "alpha") and abs(args.alpha + args.beta - 1.0) > 1e-9:
        print(f"error: alpha + beta must equal 1, got {args.alpha} + {args.beta}",
              file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: input file not found: {exc.filename}", file=sys.stderr)
        return 2
    except _STAGE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
