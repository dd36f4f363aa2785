"""Scar controller and image synthesis.

A controller samples scar semantics (wall location, extent); the synthesizer
realizes them as a smoothed elliptical enhancement field confined to the
myocardium and blends it into the slice:

    I_synth = I * (1 - M) + gamma * max(I) * M

Per-record draw order is fixed: gate, location mode, location words, extent,
center index, r1, r2, alpha, sigma uniform, gamma, caption synonym. Records
are therefore reproducible from (master seed, record index) alone.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import Mapping

import numpy as np

from .anatomy import (
    Extent,
    ScarSpec,
    SliceLevel,
    WallLocation,
    angular_segments,
    boundary_distances,
    candidate_region,
    concentric_layers,
    location_to_segments,
)
from .captions import Caption, generate_negative_caption, generate_positive_caption
from .errors import EmptyCandidateError
from .raster import GrayImage, LabeledMask, Point2, gaussian_smooth, minmax_normalize, rasterize_ellipse
from .rng import SplitMix64, derive_record_seed

log = logging.getLogger(__name__)

_RASTER_RETRIES = 5
_MIN_RADIUS_PX = 1.0


@dataclass(frozen=True)
class ScarParams:
    """Concrete sampled geometry of one synthetic scar."""

    center: Point2
    radii: tuple[float, float]
    alpha: float      # ellipse orientation in [0, pi)
    sigma: float      # Gaussian smoothing std in pixels
    gamma: float      # brightness factor relative to max intensity
    seed: int = 0     # per-record seed, filled in by augment_record


@dataclass(frozen=True)
class SynthConfig:
    """Augmentation hyperparameters.

    `rho` maps each extent to the (min, max) ellipse-radius fraction of the
    local wall thickness.
    """

    lam: float = 0.7
    rho: Mapping[Extent, tuple[float, float]] = None  # type: ignore[assignment]
    s1: float = 2.0
    s2: float = 2.0
    b1: float = 0.8
    b2: float = 1.0
    master_seed: int = 0

    def __post_init__(self):
        if self.rho is None:
            object.__setattr__(self, "rho", dict(DEFAULT_RHO))
        if not (0.0 <= self.lam <= 1.0):
            raise ValueError(f"lambda must be in [0, 1], got {self.lam}")
        if not (0.0 <= self.b1 <= self.b2):
            raise ValueError(f"need 0 <= b1 <= b2, got {self.b1}, {self.b2}")
        if self.s1 < 0 or self.s2 < 0:
            raise ValueError("sigma parameters must be non-negative")
        rho = {}
        for extent in Extent:
            if extent not in self.rho:
                raise ValueError(f"rho missing extent {extent.value}")
            lo, hi = self.rho[extent]
            if not (0.0 < lo <= hi <= 1.0):
                raise ValueError(f"need 0 < rho_min <= rho_max <= 1 for {extent.value}, got ({lo}, {hi})")
            rho[extent] = (float(lo), float(hi))
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "master_seed", int(self.master_seed))

    def digest(self) -> str:
        import hashlib
        import json

        payload = {
            "lambda": self.lam,
            "rho": {e.value: list(self.rho[e]) for e in Extent},
            "s1": self.s1, "s2": self.s2, "b1": self.b1, "b2": self.b2,
            "master_seed": self.master_seed,
        }
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()


DEFAULT_RHO: dict[Extent, tuple[float, float]] = {
    Extent.SUB_ENDOCARDIAL: (0.1, 0.4),
    Extent.MID_MYOCARDIAL: (0.1, 0.4),
    Extent.EPICARDIAL: (0.1, 0.4),
    Extent.TRANSMURAL: (0.7, 1.0),
}

_LOCATION_BASES = ("anterior", "inferior", "posterior")
_LOCATION_AXES = ("lateral", "septal")


def sample_scar_spec(rng: SplitMix64, level: SliceLevel) -> ScarSpec:
    """Controller draw: location mode (base-only / axis-only / combination)
    with equal probability, each word uniform in its set, extent uniform."""
    mode = rng.randint(3)
    if mode == 0:
        location = WallLocation(base=rng.choice(_LOCATION_BASES))
    elif mode == 1:
        location = WallLocation(axis=rng.choice(_LOCATION_AXES))
    else:
        location = WallLocation(base=rng.choice(_LOCATION_BASES),
                                axis=rng.choice(_LOCATION_AXES))
    extent = rng.choice(tuple(Extent))
    return ScarSpec(location=location, extent=extent, level=level)


def realize_scar_field(candidate: LabeledMask, myo: LabeledMask, center: Point2,
                       radii: tuple[float, float], alpha: float, sigma: float) -> GrayImage:
    """Deterministic field construction from concrete parameters: rasterize
    the ellipse, clip to the candidate region, smooth, confine to the
    myocardium, min-max normalize."""
    ellipse = rasterize_ellipse(center, radii, alpha, (candidate.width, candidate.height))
    clipped = ellipse.labels & candidate.labels
    if not clipped.any():
        raise EmptyCandidateError("rasterized ellipse misses the candidate region")
    field = gaussian_smooth(GrayImage(clipped.astype(np.float64)), sigma)
    confined = GrayImage(field.data * (myo.labels > 0), field.spacing)
    return minmax_normalize(confined)


def synthesize_scar_field(rng: SplitMix64, candidate: LabeledMask, myo: LabeledMask,
                          cfg: SynthConfig, extent: Extent,
                          distances: tuple[np.ndarray, np.ndarray] | None = None,
                          ) -> tuple[GrayImage, ScarParams]:
    """Sample a scar inside the candidate region and realize its field.

    Center is uniform over candidate pixels; radii are uniform between the
    extent's fractions of the local wall thickness (floored at one pixel so
    the ellipse always rasterizes). Draw order: center, r1, r2, alpha, sigma
    uniform, gamma.
    """
    ys, xs = np.nonzero(candidate.labels > 0)
    if xs.size == 0:
        raise EmptyCandidateError("candidate region is empty")
    if distances is None:
        distances = boundary_distances(myo)
    rho_min, rho_max = cfg.rho[extent]
    last_err = None
    for _ in range(_RASTER_RETRIES):
        idx = rng.randint(xs.size)
        center = Point2(float(xs[idx]), float(ys[idx]))
        th = float(distances[0][ys[idx], xs[idx]] + distances[1][ys[idx], xs[idx]])
        r_lo = max(_MIN_RADIUS_PX, th * rho_min)
        r_hi = max(_MIN_RADIUS_PX, th * rho_max)
        r1 = rng.uniform(r_lo, r_hi)
        r2 = rng.uniform(r_lo, r_hi)
        alpha = rng.uniform(0.0, math.pi)
        sigma = rng.random() * cfg.s1 + cfg.s2
        gamma = rng.uniform(cfg.b1, cfg.b2)
        try:
            field = realize_scar_field(candidate, myo, center, (r1, r2), alpha, sigma)
        except EmptyCandidateError as err:
            last_err = err
            continue
        return field, ScarParams(center=center, radii=(r1, r2), alpha=alpha,
                                 sigma=sigma, gamma=gamma)
    raise EmptyCandidateError(f"no usable ellipse after {_RASTER_RETRIES} attempts: {last_err}")


def blend(img: GrayImage, field: GrayImage, gamma: float) -> GrayImage:
    """Blend the enhancement field into the image.

    Pixels with field value 0 are returned bit-for-bit; every other pixel is
    the convex combination of its intensity and gamma * max intensity.
    """
    if img.data.shape != field.data.shape:
        raise ValueError("image and field grids differ")
    m = field.data
    if m.min() < 0.0 or m.max() > 1.0:
        raise ValueError("field values must lie in [0, 1]")
    peak = float(img.data.max())
    out = img.data * (1.0 - m) + gamma * peak * m
    untouched = m == 0.0
    out[untouched] = img.data[untouched]
    return GrayImage(out, img.spacing)


@dataclass(frozen=True)
class PreparedSlice:
    """A slice after preprocessing and orientation normalization, ready for
    augmentation."""

    image: GrayImage
    myo_mask: LabeledMask
    anterior: Point2
    inferior: Point2
    level: SliceLevel
    lge_negative: bool


@dataclass(frozen=True)
class AnatomyContext:
    """Segment/layer maps and wall-depth fields for one prepared slice."""

    segment_map: LabeledMask
    layer_map: LabeledMask
    d_in: np.ndarray
    d_out: np.ndarray


def build_anatomy_context(prepared: PreparedSlice, center: Point2 | None = None) -> AnatomyContext:
    if center is None:
        ys, xs = np.nonzero(prepared.myo_mask.labels > 0)
        center = Point2(float(xs.mean()), float(ys.mean()))
    seg = angular_segments(prepared.myo_mask, center, prepared.anterior,
                           prepared.inferior, prepared.level)
    layers = concentric_layers(prepared.myo_mask)
    d_in, d_out = boundary_distances(prepared.myo_mask)
    return AnatomyContext(segment_map=seg, layer_map=layers, d_in=d_in, d_out=d_out)


@dataclass(frozen=True)
class AugmentResult:
    """Outcome of augment_record, before any serialization."""

    image: GrayImage
    caption: Caption
    synthetic: bool
    gate_draw: float
    seed: int
    spec: ScarSpec | None = None
    params: ScarParams | None = None


def gate_decision(cfg: SynthConfig, record_index: int) -> tuple[bool, float, int]:
    """First per-record draw: augment iff u < lambda. Returns (augment, u, seed)."""
    seed = derive_record_seed(cfg.master_seed, record_index)
    u = SplitMix64(seed).random()
    return u < cfg.lam, u, seed


def augment_record(prepared: PreparedSlice, cfg: SynthConfig, record_index: int,
                   ctx: AnatomyContext | None = None) -> AugmentResult:
    """Apply the synthetic-scar pipeline to one LGE-negative prepared slice.

    With probability lambda the record gets a scar and a positive caption;
    otherwise it passes through with the negative caption. A record whose
    candidate region is empty passes through with a logged warning.
    """
    if not prepared.lge_negative:
        raise ValueError("augment_record requires an LGE-negative record")
    seed = derive_record_seed(cfg.master_seed, record_index)
    rng = SplitMix64(seed)
    gate = rng.random()
    if gate >= cfg.lam:
        return AugmentResult(image=prepared.image,
                             caption=generate_negative_caption(prepared.level),
                             synthetic=False, gate_draw=gate, seed=seed)
    spec = sample_scar_spec(rng, prepared.level)
    if ctx is None:
        ctx = build_anatomy_context(prepared)
    segments = location_to_segments(spec.location, spec.level)
    try:
        cand = candidate_region(prepared.myo_mask, segments, spec.extent,
                                ctx.segment_map, ctx.layer_map)
        field, params = synthesize_scar_field(rng, cand, prepared.myo_mask, cfg,
                                              spec.extent, distances=(ctx.d_in, ctx.d_out))
    except EmptyCandidateError as err:
        log.warning("record %d passes through unaugmented: %s", record_index, err)
        return AugmentResult(image=prepared.image,
                             caption=generate_negative_caption(prepared.level),
                             synthetic=False, gate_draw=gate, seed=seed)
    params = replace(params, seed=seed)
    image = blend(prepared.image, field, params.gamma)
    caption = generate_positive_caption(spec, rng)
    return AugmentResult(image=image, caption=caption, synthetic=True,
                         gate_draw=gate, seed=seed, spec=spec, params=params)


DEFAULT_CONFIG = SynthConfig()
