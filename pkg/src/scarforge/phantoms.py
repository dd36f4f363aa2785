"""Parametric annulus phantoms with known geometry.

These stand in for clinical slices everywhere in the test suite: an annular
"wall" of known radii on a dim background, with insertion points placed
analytically on a circle. No clinical data ships with the repository.
"""

from __future__ import annotations

import math

import numpy as np

from .raster import GrayImage, LabeledMask, Point2
from .rng import SplitMix64

CAVITY_FRACTION = 0.5      # cavity intensity relative to the wall
BACKGROUND_FRACTION = 0.15


def make_annulus(center: Point2, r_inner: float, r_outer: float, grid: tuple[int, int],
                 base_intensity: float = 0.6, noise_sigma: float = 0.0,
                 rng: SplitMix64 | None = None,
                 spacing: tuple[float, float] = (1.0, 1.0)) -> tuple[GrayImage, LabeledMask]:
    """Annular wall mask plus a matching intensity image.

    The wall carries `base_intensity`; cavity and background are strictly
    dimmer. Optional Gaussian pixel noise is drawn from `rng` (row-major
    order); intensities are clipped at zero.
    """
    if not (0 < r_inner < r_outer):
        raise ValueError(f"need 0 < r_inner < r_outer, got {r_inner}, {r_outer}")
    w, h = grid
    if w <= 0 or h <= 0:
        raise ValueError(f"degenerate grid {grid}")
    xs, ys = np.meshgrid(np.arange(w, dtype=np.float64), np.arange(h, dtype=np.float64))
    r = np.hypot(xs - center.x, ys - center.y)
    wall = (r >= r_inner) & (r <= r_outer)
    cavity = r < r_inner

    img = np.full((h, w), base_intensity * BACKGROUND_FRACTION)
    img[cavity] = base_intensity * CAVITY_FRACTION
    img[wall] = base_intensity
    if noise_sigma > 0:
        if rng is None:
            raise ValueError("noise requires an rng")
        noise = rng.normal_array(w * h, sigma=noise_sigma).reshape(h, w)
        img = np.maximum(img + noise, 0.0)
    return GrayImage(img, spacing), LabeledMask(wall.astype(np.int32))


def place_rvips(center: Point2, radius: float, anterior_angle: float,
                separation: float) -> tuple[Point2, Point2]:
    """Anterior/inferior insertion points on the circle of given radius.

    The inferior point sits `separation` radians beyond the anterior one in
    the positive (+x toward +y) direction, i.e. the septal sweep used by the
    segment builder. A separation of exactly pi is emitted as-is so callers
    can exercise the downstream ambiguity error.
    """
    if not (0.0 < separation <= math.pi):
        raise ValueError(f"separation must be in (0, pi], got {separation}")
    anterior = Point2(center.x + radius * math.cos(anterior_angle),
                      center.y + radius * math.sin(anterior_angle))
    inferior_angle = anterior_angle + separation
    inferior = Point2(center.x + radius * math.cos(inferior_angle),
                      center.y + radius * math.sin(inferior_angle))
    return anterior, inferior
