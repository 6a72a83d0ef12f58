"""wisp: whitespace diagnosis and macro placement refinement for rectilinear floorplans.

The package renders a floorplan to a raster, recovers coarse masks from the
rendered colors, flags enclosed whitespace pockets near macros, scores every
in-outline pixel with a distance-weighted Gaussian mixture built from the
macro footprints, nudges macros with a direction-aware annealer, and proposes
outline trims that reclaim cheap border whitespace.
"""

from .floorplan import (
    CellRegion,
    Floorplan,
    FloorplanParseError,
    MacroInstance,
    Net,
    Pin,
    apply_positions,
    hpwl,
    parse_floorplan,
    serialize_floorplan,
)
from .geometry import GeometryError, RectilinearOutline
from .raster import Canvas, PixelClass, PixelGrid, rasterize, render_rgb
from .scoring import ScoreMap, ScoringError, build_score_map, total_score
from .segmentation import ParsedMasks, SegmentationError, parse
from .refinement import RefinementError, RefinementResult, SaConfig, anneal
from .recycling import ReclaimError, ReclaimPlan, reclaim_candidates, trim_outline
from .fixtures import FixtureError, gen_fixture

__version__ = "0.1.0"

__all__ = [
    "Canvas",
    "CellRegion",
    "Floorplan",
    "FloorplanParseError",
    "FixtureError",
    "GeometryError",
    "MacroInstance",
    "Net",
    "ParsedMasks",
    "PixelClass",
    "PixelGrid",
    "Pin",
    "RectilinearOutline",
    "RefinementError",
    "RefinementResult",
    "ReclaimError",
    "ReclaimPlan",
    "SaConfig",
    "ScoreMap",
    "ScoringError",
    "SegmentationError",
    "anneal",
    "apply_positions",
    "build_score_map",
    "gen_fixture",
    "hpwl",
    "parse",
    "parse_floorplan",
    "rasterize",
    "reclaim_candidates",
    "render_rgb",
    "serialize_floorplan",
    "total_score",
    "trim_outline",
]
