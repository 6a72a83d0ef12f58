"""Whitespace cost model: a Gaussian mixture constructed from macro footprints.

Each macro contributes an axis-aligned Gaussian centered on its footprint
with sigmas proportional to its pixel dimensions (floored at one pixel).
A pixel's mixture weights grow with Euclidean distance to each macro center,
so remote macros dominate and whitespace far from everything scores low.
Pixels labeled wasted are boosted by (1 + gamma). Scores exist only on the
in-outline, non-macro domain; everywhere else the map holds zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numba
import numpy as np

from .raster import PixelClass, PixelGrid


class ScoringError(ValueError):
    """Raised when the mixture is undefined or the domain is empty."""


@dataclass(frozen=True)
class MacroGaussian:
    """One mixture component, all quantities in pixel units."""

    cx: float
    cy: float
    sigma_x: float
    sigma_y: float


def macro_gaussians(grid: PixelGrid, sigma_scale: float = 0.5) -> tuple[MacroGaussian, ...]:
    """Build one component per macro from its continuous pixel rectangle."""
    if sigma_scale <= 0.0:
        raise ScoringError(f"sigma_scale must be positive, got {sigma_scale}")
    out = []
    for x, y, w, h in grid.macro_rects_px:
        out.append(MacroGaussian(
            cx=x + w / 2.0,
            cy=y + h / 2.0,
            sigma_x=max(1.0, sigma_scale * w),
            sigma_y=max(1.0, sigma_scale * h),
        ))
    return tuple(out)


def gaussian_density(px: float, py: float, g: MacroGaussian) -> float:
    """Separable 2-D normal density of one component at a pixel point."""
    zx = (px - g.cx) / g.sigma_x
    zy = (py - g.cy) / g.sigma_y
    return math.exp(-0.5 * (zx * zx + zy * zy)) / (2.0 * math.pi * g.sigma_x * g.sigma_y)


def mixture_weights(px: float, py: float, gaussians: Sequence[MacroGaussian]) -> np.ndarray:
    """Distance-proportional component weights at a pixel point.

    Weights sum to 1 and grow with distance; when the point coincides with
    every center the weights fall back to uniform.
    """
    if not gaussians:
        raise ScoringError("mixture is undefined without macros")
    dists = np.array([math.hypot(px - g.cx, py - g.cy) for g in gaussians])
    total = dists.sum()
    if total == 0.0:
        return np.full(len(gaussians), 1.0 / len(gaussians))
    return dists / total


def score_pixel(px: float, py: float, gaussians: Sequence[MacroGaussian],
                wasted: bool = False, gamma: float = 0.8) -> float:
    """Reference scalar scoring rule; the map builder must agree with it."""
    weights = mixture_weights(px, py, gaussians)
    base = float(sum(w * gaussian_density(px, py, g) for w, g in zip(weights, gaussians)))
    return base * (1.0 + gamma) if wasted else base


@dataclass(frozen=True)
class ScoreMap:
    """Per-pixel scores on the scoring domain (zero elsewhere)."""

    values: np.ndarray
    domain: np.ndarray
    gamma: float

    def total(self) -> float:
        n = int(self.domain.sum())
        if n == 0:
            raise ScoringError("scoring domain is empty")
        return float(self.values.sum() / n)


@numba.njit(cache=True, fastmath=True)
def _score_kernel(domain, wasted, dx2, dy2, ex, ey, coef, gamma, out):  # pragma: no cover
    height = dy2.shape[1]
    width = dx2.shape[1]
    count = coef.shape[0]
    for r in range(height):
        for c in range(width):
            if not domain[r, c]:
                out[r, c] = 0.0
                continue
            dist_sum = 0.0
            acc = 0.0
            dens_sum = 0.0
            for k in range(count):
                dist = np.sqrt(dx2[k, c] + dy2[k, r])
                dens = coef[k] * ex[k, c] * ey[k, r]
                dist_sum += dist
                acc += dist * dens
                dens_sum += dens
            base = acc / dist_sum if dist_sum > 0.0 else dens_sum / count
            out[r, c] = base * (1.0 + gamma) if wasted[r, c] else base


def build_score_map(grid: PixelGrid, wasted: np.ndarray | None = None, *,
                    gamma: float = 0.8, sigma_scale: float = 0.5) -> ScoreMap:
    """Score every domain pixel (cell or whitespace class) of a grid.

    `wasted` marks pixels whose score gets the (1 + gamma) boost; it may be
    a stale mask from an earlier labeling pass, since only its intersection
    with the current domain matters.
    """
    if gamma < 0.0:
        raise ScoringError(f"gamma must be >= 0, got {gamma}")
    gaussians = macro_gaussians(grid, sigma_scale)
    if not gaussians:
        raise ScoringError("mixture is undefined without macros")
    domain = (grid.classes == PixelClass.CELL) | (grid.classes == PixelClass.WHITESPACE)
    if wasted is None:
        wasted = np.zeros_like(domain)
    if wasted.shape != domain.shape:
        raise ScoringError("wasted mask shape does not match the grid")

    # Separable tables: per-component axis distances and 1-D Gaussian factors.
    xs = np.arange(grid.width, dtype=np.float64) + 0.5
    ys = np.arange(grid.height, dtype=np.float64) + 0.5
    cx = np.array([g.cx for g in gaussians])
    cy = np.array([g.cy for g in gaussians])
    sx = np.array([g.sigma_x for g in gaussians])
    sy = np.array([g.sigma_y for g in gaussians])
    dx2 = (xs[None, :] - cx[:, None]) ** 2
    dy2 = (ys[None, :] - cy[:, None]) ** 2
    ex = np.exp(-0.5 * dx2 / (sx[:, None] ** 2))
    ey = np.exp(-0.5 * dy2 / (sy[:, None] ** 2))
    coef = 1.0 / (2.0 * np.pi * sx * sy)

    values = np.empty(domain.shape, dtype=np.float64)
    _score_kernel(domain, wasted.astype(bool), dx2, dy2, ex, ey, coef,
                  float(gamma), values)
    return ScoreMap(values=values, domain=domain, gamma=float(gamma))


def total_score(smap: ScoreMap) -> float:
    """Mean score over the domain; the quantity the refiner minimizes."""
    return smap.total()
