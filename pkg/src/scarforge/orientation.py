"""Anatomy-informed normalization of LV orientation.

Each slice is rotated so the line from the anterior to the inferior RV
insertion point runs along the vertical image axis with the anterior point on
top. Landmarks are always transformed analytically, never re-detected from
the rotated raster.
"""

from __future__ import annotations

import math

from .errors import DegenerateLandmarksError
from .raster import AffineTransform, GrayImage, LabeledMask, Point2, rotate_about, warp_mask


def orientation_angle(anterior: Point2, inferior: Point2) -> float:
    """Angle in (-pi, pi] that rotates (inferior - anterior) onto (0, +1),
    i.e. anterior above inferior in image coordinates."""
    vx = inferior.x - anterior.x
    vy = inferior.y - anterior.y
    if math.hypot(vx, vy) < 1e-6:
        raise DegenerateLandmarksError("insertion points coincide")
    theta = math.pi / 2.0 - math.atan2(vy, vx)
    if theta > math.pi:
        theta -= 2.0 * math.pi
    elif theta <= -math.pi:
        theta += 2.0 * math.pi
    return theta


def normalize_orientation(
    img: GrayImage,
    masks: list[LabeledMask],
    anterior: Point2,
    inferior: Point2,
    center: Point2,
) -> tuple[GrayImage, list[LabeledMask], Point2, Point2, AffineTransform]:
    """Rotate image (bilinear), masks (nearest) and landmarks (exact affine)
    about `center` so the insertion-point line becomes vertical."""
    theta = orientation_angle(anterior, inferior)
    if theta == 0.0:
        return img, list(masks), anterior, inferior, AffineTransform.rotation(center, 0.0)
    out_img, t = rotate_about(img, center, theta, interp="bilinear", fill=0.0)
    out_masks = [warp_mask(m, t, (m.width, m.height)) for m in masks]
    return out_img, out_masks, t.apply(anterior), t.apply(inferior), t
