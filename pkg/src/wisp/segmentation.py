"""Mask recovery from rendered floorplan images.

Rather than trusting the rasterizer's class labels, this module re-derives
macro / cell / whitespace masks from the rendered RGB picture via HSV color
bands, cleans the whitespace mask by subtracting a dilated cell halo, labels
the surviving whitespace into 4-connected regions, and flags a region as
*wasted* when it touches the dilated macro halo and its pixel area falls in
a configurable band. Edge and corner detectors provide an independent sanity
check that the render really contains axis-aligned geometry.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numba
import numpy as np
from scipy import ndimage

from .raster import DEFAULT_PALETTE, PixelClass, PixelGrid, render_rgb


class SegmentationError(ValueError):
    """Raised for invalid masks, kernels, or detector parameters."""


# HSV bands that recover classes from the default palette. Hue is degrees in
# [0, 360); saturation and value are fractions in [0, 1]. The macro band wraps
# around the hue origin.
MACRO_HUE = (350.0, 10.0)
MACRO_SAT_MIN = 0.5
CELL_HUE = (220.0, 260.0)
CELL_SAT_MIN = 0.5
WHITE_SAT_MAX = 0.1
WHITE_VAL_MIN = 0.9


@numba.njit(cache=True)
def _hsv_kernel(rgb, out):  # pragma: no cover - exercised via to_hsv
    height, width = rgb.shape[0], rgb.shape[1]
    for r in range(height):
        for c in range(width):
            red = rgb[r, c, 0] / 255.0
            green = rgb[r, c, 1] / 255.0
            blue = rgb[r, c, 2] / 255.0
            mx = max(red, green, blue)
            mn = min(red, green, blue)
            delta = mx - mn
            if delta == 0.0:
                hue = 0.0
            elif mx == red:
                hue = 60.0 * (((green - blue) / delta) % 6.0)
            elif mx == green:
                hue = 60.0 * ((blue - red) / delta + 2.0)
            else:
                hue = 60.0 * ((red - green) / delta + 4.0)
            out[r, c, 0] = hue
            out[r, c, 1] = 0.0 if mx == 0.0 else delta / mx
            out[r, c, 2] = mx


def to_hsv(rgb: np.ndarray) -> np.ndarray:
    """Convert (H, W, 3) uint8 RGB to float64 HSV with hue in [0, 360)."""
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise SegmentationError(f"expected (H, W, 3) RGB array, got shape {rgb.shape}")
    out = np.empty(rgb.shape, dtype=np.float64)
    _hsv_kernel(np.ascontiguousarray(rgb), out)
    return out


def _hue_band(hue: np.ndarray, lo: float, hi: float) -> np.ndarray:
    if lo <= hi:
        return (hue >= lo) & (hue <= hi)
    return (hue >= lo) | (hue <= hi)  # band wraps through 0


def extract_masks(hsv: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Split an HSV image into (macro, cell, whitespace) boolean masks.

    Pixels outside every band (e.g. the out-of-outline grey) land in no mask.
    """
    hue, sat, val = hsv[..., 0], hsv[..., 1], hsv[..., 2]
    macro = _hue_band(hue, *MACRO_HUE) & (sat > MACRO_SAT_MIN)
    cell = _hue_band(hue, *CELL_HUE) & (sat > CELL_SAT_MIN)
    white = (sat < WHITE_SAT_MAX) & (val > WHITE_VAL_MIN)
    return macro, cell, white


def _spread(mask: np.ndarray, reach: int, axis: int) -> np.ndarray:
    out = mask.copy()
    n = mask.shape[axis]
    for d in range(1, min(reach, n - 1) + 1):
        if axis == 0:
            out[d:, :] |= mask[:-d, :]
            out[:-d, :] |= mask[d:, :]
        else:
            out[:, d:] |= mask[:, :-d]
            out[:, :-d] |= mask[:, d:]
    return out


def dilate(mask: np.ndarray, kernel: tuple[int, int] = (2, 2), iterations: int = 3) -> np.ndarray:
    """Grow a mask with a solid rectangular window, repeated `iterations` times.

    One pass sets an output pixel iff some placement of the kernel window that
    covers the pixel also covers at least one input pixel. A window of
    `kernel` = (rows, cols) therefore reaches (rows-1, cols-1) pixels in every
    direction, so the pass is symmetric and separable regardless of how the
    window is anchored. `iterations=0` returns a copy of the input.
    """
    if mask.ndim != 2:
        raise SegmentationError("dilate() expects a 2-D mask")
    kh, kw = kernel
    if kh < 1 or kw < 1:
        raise SegmentationError(f"kernel sides must be >= 1, got {kernel}")
    if iterations < 0:
        raise SegmentationError(f"iterations must be >= 0, got {iterations}")
    out = mask.astype(bool).copy()
    for _ in range(iterations):
        out = _spread(_spread(out, kh - 1, 0), kw - 1, 1)
    return out


def subtract_dilated_cells(whitespace: np.ndarray, cell_dilated: np.ndarray) -> np.ndarray:
    """Remove the dilated cell halo so ragged cell boundaries do not leak
    thin slivers into the whitespace regions."""
    if whitespace.shape != cell_dilated.shape:
        raise SegmentationError("mask shapes differ")
    return whitespace & ~cell_dilated


@dataclass(frozen=True)
class Region:
    """One 4-connected whitespace region."""

    id: int
    area_px: int
    bbox: tuple[int, int, int, int]  # r0, c0, r1, c1 inclusive
    touches_dilated_macro: bool = False
    wasted: bool = False


@dataclass(frozen=True)
class LabeledRegions:
    """Dense labeling: `label` holds 0 for background, region ids from 1 up,
    assigned in raster-scan order of each region's first pixel."""

    label: np.ndarray
    regions: tuple[Region, ...]


_CROSS = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=np.uint8)


def connected_components(mask: np.ndarray) -> LabeledRegions:
    """Label 4-connected regions of a boolean mask."""
    if mask.ndim != 2:
        raise SegmentationError("connected_components() expects a 2-D mask")
    label, count = ndimage.label(mask, structure=_CROSS)
    label = label.astype(np.int32, copy=False)
    if count == 0:
        return LabeledRegions(label, ())
    areas = np.bincount(label.ravel(), minlength=count + 1)
    regions = []
    for rid, slc in enumerate(ndimage.find_objects(label), start=1):
        r0, c0 = slc[0].start, slc[1].start
        r1, c1 = slc[0].stop - 1, slc[1].stop - 1
        regions.append(Region(rid, int(areas[rid]), (r0, c0, r1, c1)))
    return LabeledRegions(label, tuple(regions))


def label_wasted(labeled: LabeledRegions, macro_dilated: np.ndarray,
                 area_min: int = 2000, area_max: int = 20000) -> tuple[LabeledRegions, np.ndarray]:
    """Flag regions that intersect the dilated macro halo and whose area is
    within [area_min, area_max], both bounds inclusive."""
    if area_min > area_max:
        raise SegmentationError(f"area_min {area_min} exceeds area_max {area_max}")
    count = len(labeled.regions)
    touch = np.zeros(count + 1, dtype=bool)
    hits = labeled.label[macro_dilated]
    touch[np.unique(hits[hits > 0])] = True
    regions = []
    wasted_flag = np.zeros(count + 1, dtype=bool)
    for region in labeled.regions:
        touches = bool(touch[region.id])
        wasted = touches and area_min <= region.area_px <= area_max
        wasted_flag[region.id] = wasted
        regions.append(replace(region, touches_dilated_macro=touches, wasted=wasted))
    return LabeledRegions(labeled.label, tuple(regions)), wasted_flag[labeled.label]


@dataclass(frozen=True)
class ParsedMasks:
    """Everything the mask-recovery pass derives from one rendered grid."""

    macro: np.ndarray
    cell: np.ndarray
    whitespace: np.ndarray
    macro_dilated: np.ndarray
    cell_dilated: np.ndarray
    whitespace_clean: np.ndarray
    regions: LabeledRegions
    wasted: np.ndarray
    unmatched_px: int

    @property
    def wasted_regions(self) -> tuple[Region, ...]:
        return tuple(r for r in self.regions.regions if r.wasted)


def parse(grid: PixelGrid, *, area_min: int = 2000, area_max: int = 20000,
          kernel: tuple[int, int] = (2, 2), iterations: int = 3,
          palette: dict[PixelClass, tuple[int, int, int]] | None = None) -> ParsedMasks:
    """Run the full mask-recovery pass over one rendered placement."""
    rgb = render_rgb(grid, DEFAULT_PALETTE if palette is None else palette)
    hsv = to_hsv(rgb)
    macro, cell, white = extract_masks(hsv)
    cell_dilated = dilate(cell, kernel, iterations)
    macro_dilated = dilate(macro, kernel, iterations)
    clean = subtract_dilated_cells(white, cell_dilated)
    labeled = connected_components(clean)
    labeled, wasted = label_wasted(labeled, macro_dilated, area_min, area_max)
    inside = grid.classes != PixelClass.OUTSIDE
    unmatched = int((inside & ~(macro | cell | white)).sum())
    return ParsedMasks(macro, cell, white, macro_dilated, cell_dilated, clean,
                       labeled, wasted, unmatched)


def _luma(image: np.ndarray) -> np.ndarray:
    if image.ndim == 3:
        rgb = image.astype(np.float64)
        return 0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2]
    return image.astype(np.float64)


def canny_edges(image: np.ndarray, low: float, high: float) -> np.ndarray:
    """Single-pixel edge map: Gaussian blur, Sobel gradients, non-maximum
    suppression along the gradient, then double-threshold hysteresis.

    Suppression ties break toward the positive gradient side so edges stay
    one pixel wide across perfectly symmetric steps.
    """
    if not 0 <= low <= high:
        raise SegmentationError(f"need 0 <= low <= high, got low={low} high={high}")
    gray = _luma(image)
    if gray.ndim != 2 or min(gray.shape) < 3:
        raise SegmentationError("edge detection needs a 2-D image at least 3x3")
    smooth = ndimage.gaussian_filter(gray, sigma=1.0, mode="nearest")
    gx = ndimage.sobel(smooth, axis=1, mode="nearest")
    gy = ndimage.sobel(smooth, axis=0, mode="nearest")
    mag = np.hypot(gx, gy)

    angle = np.rad2deg(np.arctan2(gy, gx)) % 180.0
    padded = np.pad(mag, 1, mode="constant")
    h, w = mag.shape
    rr, cc = np.mgrid[1:h + 1, 1:w + 1]
    # sector -> (dr, dc) of the neighbor on the positive gradient side
    sectors = [
        ((angle < 22.5) | (angle >= 157.5), (0, 1)),
        ((angle >= 22.5) & (angle < 67.5), (1, 1)),
        ((angle >= 67.5) & (angle < 112.5), (1, 0)),
        ((angle >= 112.5) & (angle < 157.5), (1, -1)),
    ]
    keep = np.zeros_like(mag, dtype=bool)
    for sel, (dr, dc) in sectors:
        fwd = padded[rr + dr, cc + dc]
        bwd = padded[rr - dr, cc - dc]
        keep |= sel & (mag >= bwd) & (mag > fwd)
    thin = keep & (mag >= low)
    strong = thin & (mag >= high)
    if not strong.any():
        return np.zeros_like(thin)
    lab, count = ndimage.label(thin, structure=np.ones((3, 3), dtype=np.uint8))
    keep_ids = np.zeros(count + 1, dtype=bool)
    ids = lab[strong]
    keep_ids[np.unique(ids[ids > 0])] = True
    return keep_ids[lab]


def right_angle_corners(edges: np.ndarray) -> list[tuple[int, int]]:
    """Edge pixels with both a horizontal and a vertical edge neighbor:
    on a clean render these are exactly the rectilinear corners."""
    if edges.ndim != 2:
        raise SegmentationError("expected a 2-D edge mask")
    e = edges.astype(bool)
    horiz = np.zeros_like(e)
    horiz[:, 1:] |= e[:, :-1]
    horiz[:, :-1] |= e[:, 1:]
    vert = np.zeros_like(e)
    vert[1:, :] |= e[:-1, :]
    vert[:-1, :] |= e[1:, :]
    corners = e & horiz & vert
    return [(int(r), int(c)) for r, c in np.argwhere(corners)]
