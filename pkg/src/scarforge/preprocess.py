"""Standard image preparation chain for short-axis LGE slices.

Steps: resample to 1x1 mm, crop a 112x112 window centered on the LV mask
centroid (zero-padded at the borders), upsample 2x to 224x224, cap intensities
at the 98th percentile of the cropped result, then min-max normalize to
[0, 1]. The myocardial mask rides through the same geometric chain with
nearest-neighbor sampling and landmarks are transformed exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import RecordRejected
from .raster import (
    AffineTransform,
    GrayImage,
    LabeledMask,
    Point2,
    minmax_normalize,
    percentile,
    resample,
    warp_mask,
)

TARGET_SPACING = (1.0, 1.0)
CROP_SIZE = 112
OUTPUT_SIZE = 224
CAP_PERCENTILE = 98.0


@dataclass(frozen=True)
class PreprocessOutput:
    image: GrayImage        # 224x224, intensities in [0, 1]
    myo_mask: LabeledMask   # 224x224, same alphabet as the input mask
    anterior: Point2
    inferior: Point2
    chain: AffineTransform  # original pixel coords -> output pixel coords


def _crop_window(img: GrayImage, x0: int, y0: int, size: int) -> GrayImage:
    """Extract a size x size window starting at (x0, y0), zero-padding where
    the window leaves the image."""
    out = np.zeros((size, size), dtype=np.float64)
    sx0, sy0 = max(x0, 0), max(y0, 0)
    sx1, sy1 = min(x0 + size, img.width), min(y0 + size, img.height)
    if sx1 > sx0 and sy1 > sy0:
        out[sy0 - y0:sy1 - y0, sx0 - x0:sx1 - x0] = img.data[sy0:sy1, sx0:sx1]
    return GrayImage(out, img.spacing)


def preprocess(img: GrayImage, myo_mask: LabeledMask,
               landmarks: tuple[Point2, Point2]) -> PreprocessOutput:
    """Run the full preparation chain on one slice.

    Raises RecordRejected when the mask is empty or the myocardium does not
    survive the chain.
    """
    if img.data.shape != myo_mask.labels.shape:
        raise ValueError("image and mask grids differ")
    if not (myo_mask.labels > 0).any():
        raise RecordRejected("empty myocardium mask")
    anterior, inferior = landmarks

    resampled, t1 = resample(img, TARGET_SPACING, interp="bilinear")

    # crop center from the affine image of the original centroid, so the
    # window placement error stays below one pixel
    c1 = t1.apply(_foreground_centroid(myo_mask))
    if not (0 <= c1.x < resampled.width and 0 <= c1.y < resampled.height):
        raise RecordRejected("myocardium centroid fell outside the resampled image")
    x0 = int(math.floor(c1.x + 0.5)) - CROP_SIZE // 2
    y0 = int(math.floor(c1.y + 0.5)) - CROP_SIZE // 2
    cropped = _crop_window(resampled, x0, y0, CROP_SIZE)
    t2 = AffineTransform.translation(-float(x0), -float(y0))

    upsampled, t3 = resample(cropped, (TARGET_SPACING[0] / 2.0, TARGET_SPACING[1] / 2.0),
                             interp="bilinear")
    if upsampled.width != OUTPUT_SIZE or upsampled.height != OUTPUT_SIZE:
        raise RecordRejected(f"unexpected output grid {upsampled.width}x{upsampled.height}")

    cap = percentile(upsampled, CAP_PERCENTILE)
    capped = GrayImage(np.minimum(upsampled.data, cap), upsampled.spacing)
    normalized = minmax_normalize(capped)

    chain = t1.then(t2).then(t3)
    mask_out = warp_mask(myo_mask, chain, (OUTPUT_SIZE, OUTPUT_SIZE))
    if not (mask_out.labels > 0).any():
        raise RecordRejected("myocardium lost during preprocessing")

    return PreprocessOutput(
        image=normalized,
        myo_mask=mask_out,
        anterior=chain.apply(anterior),
        inferior=chain.apply(inferior),
        chain=chain,
    )


def _foreground_centroid(mask: LabeledMask) -> Point2:
    ys, xs = np.nonzero(mask.labels > 0)
    return Point2(float(xs.mean()), float(ys.mean()))
