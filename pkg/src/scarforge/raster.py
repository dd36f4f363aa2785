"""Raster and geometry primitives for 2D grayscale images and label maps.

Conventions used everywhere in this package:

* x is the column index (increasing rightward), y the row index (increasing
  downward); angles are measured in radians from +x toward +y.
* Pixel i spans [i - 0.5, i + 0.5), so its center sits at coordinate i and at
  physical position (i + 0.5) * spacing. Grids are corner-anchored: resampling
  maps source pixel centers to destination pixel centers through
  x_dst = (x_src + 0.5) * (s_src / s_dst) - 0.5.
* All types are immutable value objects; operations are pure functions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage


@dataclass(frozen=True)
class Point2:
    """Sub-pixel 2D point in (x=column, y=row) coordinates."""

    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"point coordinates must be finite, got ({self.x}, {self.y})")

    def distance_to(self, other: "Point2") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True)
class AffineTransform:
    """2x3 affine map (x, y) -> (xx*x + xy*y + tx, yx*x + yy*y + ty).

    Carries geometric chains (resampling, cropping, rotation) so that
    landmarks can be co-transformed exactly instead of re-detected from
    warped rasters.
    """

    xx: float
    xy: float
    tx: float
    yx: float
    yy: float
    ty: float

    def __post_init__(self):
        vals = (self.xx, self.xy, self.tx, self.yx, self.yy, self.ty)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("affine coefficients must be finite")
        if abs(self.xx * self.yy - self.xy * self.yx) < 1e-12:
            raise ValueError("affine transform is not invertible")

    @classmethod
    def identity(cls) -> "AffineTransform":
        return cls(1.0, 0.0, 0.0, 0.0, 1.0, 0.0)

    @classmethod
    def translation(cls, dx: float, dy: float) -> "AffineTransform":
        return cls(1.0, 0.0, dx, 0.0, 1.0, dy)

    @classmethod
    def rotation(cls, center: Point2, angle: float) -> "AffineTransform":
        """Rotation about `center`; positive angle turns +x toward +y."""
        c, s = math.cos(angle), math.sin(angle)
        tx = center.x - (c * center.x - s * center.y)
        ty = center.y - (s * center.x + c * center.y)
        return cls(c, -s, tx, s, c, ty)

    def apply_xy(self, x, y):
        return (self.xx * x + self.xy * y + self.tx,
                self.yx * x + self.yy * y + self.ty)

    def apply(self, p: Point2) -> Point2:
        x, y = self.apply_xy(p.x, p.y)
        return Point2(x, y)

    def then(self, after: "AffineTransform") -> "AffineTransform":
        """Composition: apply self first, then `after`."""
        a, b = after, self
        return AffineTransform(
            a.xx * b.xx + a.xy * b.yx,
            a.xx * b.xy + a.xy * b.yy,
            a.xx * b.tx + a.xy * b.ty + a.tx,
            a.yx * b.xx + a.yy * b.yx,
            a.yx * b.xy + a.yy * b.yy,
            a.yx * b.tx + a.yy * b.ty + a.ty,
        )

    def inverse(self) -> "AffineTransform":
        det = self.xx * self.yy - self.xy * self.yx
        ixx, ixy = self.yy / det, -self.xy / det
        iyx, iyy = -self.yx / det, self.xx / det
        return AffineTransform(
            ixx, ixy, -(ixx * self.tx + ixy * self.ty),
            iyx, iyy, -(iyx * self.tx + iyy * self.ty),
        )


@dataclass(frozen=True, eq=False)
class GrayImage:
    """2D float raster with physical pixel spacing in mm/px (sx, sy)."""

    data: np.ndarray
    spacing: tuple[float, float] = (1.0, 1.0)

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim != 2 or arr.size == 0:
            raise ValueError(f"image data must be a non-empty 2D array, got shape {arr.shape}")
        if not np.isfinite(arr).all():
            raise ValueError("image intensities must be finite")
        sx, sy = float(self.spacing[0]), float(self.spacing[1])
        if not (math.isfinite(sx) and math.isfinite(sy) and sx > 0 and sy > 0):
            raise ValueError(f"pixel spacing must be positive, got {self.spacing}")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)
        object.__setattr__(self, "spacing", (sx, sy))

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]


@dataclass(frozen=True, eq=False)
class LabeledMask:
    """Integer label raster over the same grid convention; 0 is background."""

    labels: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.labels)
        if arr.ndim != 2 or arr.size == 0:
            raise ValueError(f"mask must be a non-empty 2D array, got shape {arr.shape}")
        if not np.issubdtype(arr.dtype, np.integer):
            if np.issubdtype(arr.dtype, np.bool_):
                arr = arr.astype(np.int32)
            else:
                raise ValueError(f"mask labels must be integers, got dtype {arr.dtype}")
        if arr.min(initial=0) < 0:
            raise ValueError("mask labels must be non-negative")
        arr = arr.astype(np.int32)
        arr.flags.writeable = False
        object.__setattr__(self, "labels", arr)

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    @property
    def height(self) -> int:
        return self.labels.shape[0]


# ---------------------------------------------------------------------------
# sampling kernels
# ---------------------------------------------------------------------------

def _sample_nearest(data: np.ndarray, xs: np.ndarray, ys: np.ndarray, fill: float) -> np.ndarray:
    h, w = data.shape
    # half-up rounding keeps .5 ties deterministic and platform independent
    xi = np.floor(xs + 0.5).astype(np.int64)
    yi = np.floor(ys + 0.5).astype(np.int64)
    inside = (xi >= 0) & (xi < w) & (yi >= 0) & (yi < h)
    out = np.full(xs.shape, float(fill), dtype=data.dtype if data.dtype.kind == "f" else np.float64)
    out[inside] = data[yi[inside], xi[inside]]
    return out


def _sample_bilinear(data: np.ndarray, xs: np.ndarray, ys: np.ndarray, fill: float) -> np.ndarray:
    h, w = data.shape
    x0 = np.floor(xs)
    y0 = np.floor(ys)
    fx = xs - x0
    fy = ys - y0
    out = np.zeros(xs.shape, dtype=np.float64)
    for dx, dy, wgt in (
        (0, 0, (1.0 - fx) * (1.0 - fy)),
        (1, 0, fx * (1.0 - fy)),
        (0, 1, (1.0 - fx) * fy),
        (1, 1, fx * fy),
    ):
        xi = (x0 + dx).astype(np.int64)
        yi = (y0 + dy).astype(np.int64)
        inside = (xi >= 0) & (xi < w) & (yi >= 0) & (yi < h)
        vals = np.where(inside, data[np.clip(yi, 0, h - 1), np.clip(xi, 0, w - 1)], fill)
        out += wgt * vals
    return out


def _dest_grid(out_w: int, out_h: int, inv: AffineTransform):
    """Source-space sample positions for every destination pixel center."""
    xd, yd = np.meshgrid(np.arange(out_w, dtype=np.float64),
                         np.arange(out_h, dtype=np.float64))
    return inv.apply_xy(xd, yd)


def _check_interp(interp: str) -> str:
    if interp not in ("nearest", "bilinear"):
        raise ValueError(f"unknown interpolation {interp!r}")
    return interp


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------

def resample(img: GrayImage, target_spacing: tuple[float, float],
             interp: str = "bilinear") -> tuple[GrayImage, AffineTransform]:
    """Resample onto a grid with the given spacing (mm/px).

    Output dimensions are round(dim * spacing / target); sampling outside the
    source extent clamps to the edge. Returns the image together with the
    source->destination pixel transform. Raises ValueError when the output
    would be empty.
    """
    _check_interp(interp)
    tsx, tsy = float(target_spacing[0]), float(target_spacing[1])
    if not (tsx > 0 and tsy > 0):
        raise ValueError(f"target spacing must be positive, got {target_spacing}")
    sx, sy = img.spacing
    kx, ky = sx / tsx, sy / tsy
    out_w = int(math.floor(img.width * kx + 0.5))
    out_h = int(math.floor(img.height * ky + 0.5))
    if out_w <= 0 or out_h <= 0:
        raise ValueError(f"degenerate output size {out_w}x{out_h} for target spacing {target_spacing}")
    t = AffineTransform(kx, 0.0, (kx - 1.0) / 2.0, 0.0, ky, (ky - 1.0) / 2.0)
    if (tsx, tsy) == (sx, sy):
        return GrayImage(img.data, (tsx, tsy)), t
    xs, ys = _dest_grid(out_w, out_h, t.inverse())
    # edge clamp: a resize has no natural fill value
    xs = np.clip(xs, 0.0, img.width - 1.0)
    ys = np.clip(ys, 0.0, img.height - 1.0)
    sampler = _sample_bilinear if interp == "bilinear" else _sample_nearest
    out = sampler(img.data, xs, ys, 0.0)
    return GrayImage(out, (tsx, tsy)), t


def rotate_about(img: GrayImage, center: Point2, angle: float,
                 interp: str = "bilinear", fill: float = 0.0) -> tuple[GrayImage, AffineTransform]:
    """Rotate about `center`; positive angle turns +x toward +y.

    Output has the same dimensions; samples falling outside the source take
    `fill`. Zero angle returns the input bit-for-bit.
    """
    _check_interp(interp)
    if not math.isfinite(angle):
        raise ValueError("rotation angle must be finite")
    t = AffineTransform.rotation(center, angle)
    if angle == 0.0:
        return GrayImage(img.data, img.spacing), t
    xs, ys = _dest_grid(img.width, img.height, t.inverse())
    sampler = _sample_bilinear if interp == "bilinear" else _sample_nearest
    out = sampler(img.data, xs, ys, fill)
    return GrayImage(out, img.spacing), t


def warp_mask(mask: LabeledMask, transform: AffineTransform,
              out_size: tuple[int, int]) -> LabeledMask:
    """Push a label mask through an affine chain with nearest-neighbor sampling.

    Out-of-bounds pixels become background (0), so labels stay within the
    original alphabet.
    """
    out_w, out_h = out_size
    if out_w <= 0 or out_h <= 0:
        raise ValueError(f"degenerate output size {out_size}")
    xs, ys = _dest_grid(out_w, out_h, transform.inverse())
    xi = np.floor(xs + 0.5).astype(np.int64)
    yi = np.floor(ys + 0.5).astype(np.int64)
    inside = (xi >= 0) & (xi < mask.width) & (yi >= 0) & (yi < mask.height)
    out = np.zeros((out_h, out_w), dtype=np.int32)
    out[inside] = mask.labels[yi[inside], xi[inside]]
    return LabeledMask(out)


def gaussian_smooth(img: GrayImage, sigma: float) -> GrayImage:
    """Gaussian filter with kernel radius ceil(3*sigma), renormalized weights,
    and zero-padded borders. sigma == 0 is the identity."""
    if not (math.isfinite(sigma) and sigma >= 0):
        raise ValueError(f"sigma must be non-negative, got {sigma}")
    if sigma == 0.0:
        return GrayImage(img.data, img.spacing)
    radius = int(math.ceil(3.0 * sigma))
    offsets = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-0.5 * (offsets / sigma) ** 2)
    kernel /= kernel.sum()
    # separable passes with zero padding == full 2D convolution of the
    # outer-product kernel with zero padding
    tmp = ndimage.convolve1d(img.data, kernel, axis=1, mode="constant", cval=0.0)
    out = ndimage.convolve1d(tmp, kernel, axis=0, mode="constant", cval=0.0)
    return GrayImage(out, img.spacing)


def distance_transform(mask: LabeledMask, foreground_label: int = 1) -> np.ndarray:
    """Exact Euclidean distance (in pixels) to the nearest pixel that does NOT
    carry `foreground_label`. Background pixels get 0. Raises ValueError when
    every pixel is foreground (all distances would be infinite)."""
    fg = mask.labels == foreground_label
    if fg.all():
        raise ValueError("mask is entirely foreground; distances are infinite")
    if not fg.any():
        return np.zeros(mask.labels.shape, dtype=np.float64)
    return ndimage.distance_transform_edt(fg).astype(np.float64)


def percentile(img: GrayImage, q: float) -> float:
    """Linear-interpolation percentile (fractional rank q/100 * (N-1)) over
    all pixels."""
    if not (math.isfinite(q) and 0.0 <= q <= 100.0):
        raise ValueError(f"percentile rank must be in [0, 100], got {q}")
    return float(np.percentile(img.data, q, method="linear"))


def minmax_normalize(img: GrayImage) -> GrayImage:
    """Map intensities onto [0, 1]; a constant image becomes all zeros."""
    lo = float(img.data.min())
    hi = float(img.data.max())
    if hi == lo:
        return GrayImage(np.zeros_like(img.data), img.spacing)
    return GrayImage((img.data - lo) / (hi - lo), img.spacing)


def centroid(mask: LabeledMask, label: int = 1) -> Point2:
    """Arithmetic mean of the pixel-center coordinates carrying `label`."""
    ys, xs = np.nonzero(mask.labels == label)
    if xs.size == 0:
        raise ValueError(f"mask has no pixels with label {label}")
    return Point2(float(xs.mean()), float(ys.mean()))


def rasterize_ellipse(center: Point2, radii: tuple[float, float], angle: float,
                      grid: tuple[int, int]) -> LabeledMask:
    """Binary mask of the rotated filled ellipse on a (w, h) grid.

    A pixel is inside iff its center satisfies
    ((d.u)/r1)^2 + ((d.u_perp)/r2)^2 <= 1 with u = (cos a, sin a). The
    comparison carries a 1e-9 slack so pixels exactly on the boundary
    rasterize identically under the ellipse's symmetries (half turn, radius
    swap with quarter turn) instead of flipping on trigonometric rounding.
    """
    r1, r2 = float(radii[0]), float(radii[1])
    if not (r1 > 0 and r2 > 0):
        raise ValueError(f"ellipse radii must be positive, got {radii}")
    w, h = grid
    if w <= 0 or h <= 0:
        raise ValueError(f"degenerate grid {grid}")
    xs, ys = np.meshgrid(np.arange(w, dtype=np.float64), np.arange(h, dtype=np.float64))
    dx = xs - center.x
    dy = ys - center.y
    ca, sa = math.cos(angle), math.sin(angle)
    a = (dx * ca + dy * sa) / r1
    b = (-dx * sa + dy * ca) / r2
    return LabeledMask((a * a + b * b <= 1.0 + 1e-9).astype(np.int32))
