"""AHA-style anatomical partitioning of the LV myocardium.

Short-axis slices are divided into equal angular segments anchored at the
anterior RV insertion point (six 60-degree sectors on basal/mid slices, four
90-degree sectors on apical slices) and into three concentric wall layers
(endocardial / mid-myocardial / epicardial thirds of the relative wall depth).
Clinical wall-location words map onto segment IDs through a fixed table.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import ndimage

from .errors import AmbiguousAnatomyError, DegenerateLandmarksError, EmptyCandidateError, TopologyError
from .raster import LabeledMask, Point2, distance_transform


class SliceLevel(Enum):
    BASAL = "basal"
    MID = "mid"
    APICAL = "apical"


class Extent(Enum):
    SUB_ENDOCARDIAL = "sub-endocardial"
    MID_MYOCARDIAL = "mid-myocardial"
    EPICARDIAL = "epicardial"
    TRANSMURAL = "transmural"


_BASES = ("anterior", "inferior", "posterior")
_AXES = ("lateral", "septal")
_BASE_PREFIX = {"anterior": "antero", "inferior": "infero", "posterior": "postero"}


@dataclass(frozen=True)
class WallLocation:
    """Clinical wall-location word: a base word, an axis word, or both.

    Combinations render with the usual elision, e.g. inferior+septal ->
    "inferoseptal".
    """

    base: str | None = None
    axis: str | None = None

    def __post_init__(self):
        if self.base is None and self.axis is None:
            raise ValueError("wall location needs a base word, an axis word, or both")
        if self.base is not None and self.base not in _BASES:
            raise ValueError(f"unknown base wall word {self.base!r}")
        if self.axis is not None and self.axis not in _AXES:
            raise ValueError(f"unknown axis wall word {self.axis!r}")

    @property
    def text(self) -> str:
        if self.base and self.axis:
            return _BASE_PREFIX[self.base] + self.axis
        return self.base or self.axis  # type: ignore[return-value]

    @classmethod
    def from_text(cls, token: str) -> "WallLocation":
        for base in _BASES:
            for axis in _AXES:
                if token == _BASE_PREFIX[base] + axis:
                    return cls(base=base, axis=axis)
        if token in _BASES:
            return cls(base=token)
        if token in _AXES:
            return cls(axis=token)
        raise ValueError(f"unknown wall location token {token!r}")


def wall_location_tokens() -> tuple[str, ...]:
    """Every renderable wall-location token, longest first (for parsing)."""
    combos = [_BASE_PREFIX[b] + a for b in _BASES for a in _AXES]
    return tuple(sorted(combos + list(_BASES) + list(_AXES), key=len, reverse=True))


@dataclass(frozen=True)
class ScarSpec:
    """Semantic scar description chosen by the controller."""

    location: WallLocation
    extent: Extent
    level: SliceLevel


# Segment IDs in sweep order, starting at the sector that begins on the
# anterior-RVIP ray and runs through the septum toward the inferior RVIP.
_SWEEP_ORDER = {
    SliceLevel.BASAL: (2, 3, 4, 5, 6, 1),
    SliceLevel.MID: (8, 9, 10, 11, 12, 7),
    SliceLevel.APICAL: (14, 15, 16, 13),
}

# Wall-location word -> basal segment IDs; mid is the same + 6. "posterior"
# is treated as the inferolateral territory.
_BASAL_TABLE = {
    "anterior": frozenset({1}),
    "anteroseptal": frozenset({2}),
    "inferoseptal": frozenset({3}),
    "inferior": frozenset({4}),
    "inferolateral": frozenset({5}),
    "anterolateral": frozenset({6}),
    "posterior": frozenset({5}),
    "posteroseptal": frozenset({3}),
    "posterolateral": frozenset({5}),
    "lateral": frozenset({5, 6}),
    "septal": frozenset({2, 3}),
}

_APICAL_TABLE = {
    "anterior": frozenset({13}),
    "septal": frozenset({14}),
    "inferior": frozenset({15}),
    "lateral": frozenset({16}),
    "posterior": frozenset({15, 16}),
    "anteroseptal": frozenset({14}),
    "inferoseptal": frozenset({14}),
    "posteroseptal": frozenset({14}),
    "anterolateral": frozenset({16}),
    "inferolateral": frozenset({16}),
    "posterolateral": frozenset({16}),
}

_EXTENT_LAYERS = {
    Extent.SUB_ENDOCARDIAL: (1,),
    Extent.MID_MYOCARDIAL: (2,),
    Extent.EPICARDIAL: (3,),
    Extent.TRANSMURAL: (1, 2, 3),
}

_ANGLE_TOL = 1e-9


def location_to_segments(loc: WallLocation, level: SliceLevel) -> frozenset[int]:
    """Fixed wall-word -> AHA segment ID lookup (e.g. inferoseptal@basal -> {3})."""
    if level is SliceLevel.APICAL:
        return _APICAL_TABLE[loc.text]
    segs = _BASAL_TABLE[loc.text]
    if level is SliceLevel.MID:
        return frozenset(s + 6 for s in segs)
    return segs


def sweep_direction(center: Point2, anterior_rvip: Point2, inferior_rvip: Point2) -> int:
    """+1 or -1: the rotation sign that reaches the inferior-RVIP ray from the
    anterior-RVIP ray in under 180 degrees (i.e. through the septum)."""
    ax, ay = anterior_rvip.x - center.x, anterior_rvip.y - center.y
    ix, iy = inferior_rvip.x - center.x, inferior_rvip.y - center.y
    if math.hypot(ax, ay) < 1e-9 or math.hypot(ix, iy) < 1e-9:
        raise DegenerateLandmarksError("insertion point coincides with the center")
    delta = math.atan2(iy, ix) - math.atan2(ay, ax)
    delta = (delta + math.pi) % (2.0 * math.pi) - math.pi  # wrap to [-pi, pi)
    if abs(abs(delta) - math.pi) < _ANGLE_TOL or abs(delta) < _ANGLE_TOL:
        raise AmbiguousAnatomyError(
            "insertion points are collinear with the center; septum side is ambiguous")
    return 1 if delta > 0 else -1


def angular_segments(myo: LabeledMask, center: Point2, anterior_rvip: Point2,
                     inferior_rvip: Point2, level: SliceLevel) -> LabeledMask:
    """Assign an AHA segment ID to every myocardial pixel.

    Equal-width sectors are anchored on the ray center -> anterior RVIP and
    numbered along the sweep direction that runs through the septum; the first
    sector is anteroseptal (basal/mid) or septal (apical).
    """
    fg = myo.labels > 0
    if not fg.any():
        raise ValueError("myocardial mask is empty")
    sign = sweep_direction(center, anterior_rvip, inferior_rvip)
    order = _SWEEP_ORDER[level]
    nsect = len(order)
    width = 2.0 * math.pi / nsect
    anchor = math.atan2(anterior_rvip.y - center.y, anterior_rvip.x - center.x)

    ys, xs = np.nonzero(fg)
    phi = np.arctan2(ys - center.y, xs - center.x)
    off = np.mod(sign * (phi - anchor), 2.0 * math.pi)
    sector = np.minimum(np.floor(off / width).astype(np.int64), nsect - 1)
    out = np.zeros(myo.labels.shape, dtype=np.int32)
    out[ys, xs] = np.asarray(order, dtype=np.int32)[sector]
    return LabeledMask(out)


def boundary_distances(myo: LabeledMask) -> tuple[np.ndarray, np.ndarray]:
    """Per-pixel distances to the endocardial and epicardial boundaries.

    The background 4-connected component touching the image border is the
    outside (epicardial side); every other background component is cavity
    (endocardial side). Distances are to the tissue boundary: half a pixel
    short of the nearest background pixel center. Values are only meaningful
    on myocardial pixels.
    """
    fg = myo.labels > 0
    if not fg.any():
        raise ValueError("myocardial mask is empty")
    bg = ~fg
    comp, ncomp = ndimage.label(bg)
    if ncomp == 0:
        raise TopologyError("mask has no background at all")
    border_labels = set(np.unique(comp[0, :])) | set(np.unique(comp[-1, :])) \
        | set(np.unique(comp[:, 0])) | set(np.unique(comp[:, -1]))
    border_labels.discard(0)
    if not border_labels:
        raise TopologyError("mask covers the entire image border; no outside region")
    outside = np.isin(comp, sorted(border_labels))
    cavity = bg & ~outside
    if not cavity.any():
        raise TopologyError("mask has no enclosed cavity; not an annulus")
    d_in = distance_transform(LabeledMask((~cavity).astype(np.int32)))
    d_out = distance_transform(LabeledMask((~outside).astype(np.int32)))
    return d_in - 0.5, d_out - 0.5


def concentric_layers(myo: LabeledMask) -> LabeledMask:
    """Partition the myocardium into three layers by relative wall depth.

    t = d_in / (d_in + d_out); layer 1 for t < 1/3 (endocardial), layer 2 for
    t in [1/3, 2/3), layer 3 otherwise (epicardial).
    """
    d_in, d_out = boundary_distances(myo)
    fg = myo.labels > 0
    t = np.zeros_like(d_in)
    t[fg] = d_in[fg] / (d_in[fg] + d_out[fg])
    out = np.zeros(myo.labels.shape, dtype=np.int32)
    out[fg] = 1 + (t[fg] >= 1.0 / 3.0).astype(np.int32) + (t[fg] >= 2.0 / 3.0).astype(np.int32)
    return LabeledMask(out)


def thickness_at(myo: LabeledMask, p: Point2,
                 distances: tuple[np.ndarray, np.ndarray] | None = None) -> float:
    """Local wall thickness at a myocardial point: d_in + d_out.

    `distances` may pass precomputed boundary_distances to avoid repeated
    transforms.
    """
    px = int(math.floor(p.x + 0.5))
    py = int(math.floor(p.y + 0.5))
    if not (0 <= px < myo.width and 0 <= py < myo.height) or myo.labels[py, px] == 0:
        raise ValueError(f"point ({p.x}, {p.y}) is not inside the myocardium")
    d_in, d_out = distances if distances is not None else boundary_distances(myo)
    return float(d_in[py, px] + d_out[py, px])


def candidate_region(myo: LabeledMask, segments: frozenset[int] | set[int], extent: Extent,
                     segment_map: LabeledMask, layer_map: LabeledMask) -> LabeledMask:
    """Binary mask of pixels in the chosen segments whose layer matches the
    extent (transmural allows all layers). Raises when empty."""
    if not segments:
        raise ValueError("segment set is empty")
    if segment_map.labels.shape != myo.labels.shape or layer_map.labels.shape != myo.labels.shape:
        raise ValueError("segment/layer maps must share the myocardium grid")
    allowed = _EXTENT_LAYERS[extent]
    sel = (myo.labels > 0) \
        & np.isin(segment_map.labels, sorted(segments)) \
        & np.isin(layer_map.labels, allowed)
    if not sel.any():
        raise EmptyCandidateError(
            f"no pixels for segments {sorted(segments)} with extent {extent.value}")
    return LabeledMask(sel.astype(np.int32))
