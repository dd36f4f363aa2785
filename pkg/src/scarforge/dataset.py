"""Manifest and image persistence.

Manifests are JSON lines, one record per line; line order defines the record
index that drives per-record seeding. Images travel either as grayscale PNG
(8/16 bit; intensities map to [0, 1] by the maximum code value, saved as
16-bit with round(v * 65535)) or as a raw float format: ASCII header
``F32 <width> <height> <sx> <sy>\\n`` followed by row-major little-endian
32-bit floats.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .anatomy import Extent, ScarSpec, SliceLevel, WallLocation
from .errors import DataError
from .raster import GrayImage, LabeledMask, Point2
from .synth import ScarParams

MANIFEST_NAME = "manifest.jsonl"
_PNG_MAGIC = b"\x89PNG\r\n\x1a\n"
_F32_MAGIC = b"F32 "


@dataclass(frozen=True)
class DatasetRecord:
    """One input slice: file references plus per-slice metadata."""

    image_path: str
    myo_mask_path: str
    rvip_anterior: Point2
    rvip_inferior: Point2
    spacing_mm: tuple[float, float]
    slice_level: SliceLevel
    lge_negative: bool
    patient_id: str

    def to_json_dict(self) -> dict:
        return {
            "image_path": self.image_path,
            "myo_mask_path": self.myo_mask_path,
            "rvip_anterior": [self.rvip_anterior.x, self.rvip_anterior.y],
            "rvip_inferior": [self.rvip_inferior.x, self.rvip_inferior.y],
            "spacing_mm": [self.spacing_mm[0], self.spacing_mm[1]],
            "slice_level": self.slice_level.value,
            "lge_negative": self.lge_negative,
            "patient_id": self.patient_id,
        }


_RECORD_FIELDS = ("image_path", "myo_mask_path", "rvip_anterior", "rvip_inferior",
                  "spacing_mm", "slice_level", "lge_negative", "patient_id")


def _record_from_dict(obj: dict, where: str) -> DatasetRecord:
    missing = [f for f in _RECORD_FIELDS if f not in obj]
    if missing:
        raise DataError(f"{where}: missing fields {missing}")
    try:
        spacing = (float(obj["spacing_mm"][0]), float(obj["spacing_mm"][1]))
        if spacing[0] <= 0 or spacing[1] <= 0:
            raise DataError(f"{where}: spacing must be positive, got {spacing}")
        return DatasetRecord(
            image_path=str(obj["image_path"]),
            myo_mask_path=str(obj["myo_mask_path"]),
            rvip_anterior=Point2(float(obj["rvip_anterior"][0]), float(obj["rvip_anterior"][1])),
            rvip_inferior=Point2(float(obj["rvip_inferior"][0]), float(obj["rvip_inferior"][1])),
            spacing_mm=spacing,
            slice_level=SliceLevel(obj["slice_level"]),
            lge_negative=bool(obj["lge_negative"]),
            patient_id=str(obj["patient_id"]),
        )
    except DataError:
        raise
    except (TypeError, ValueError, IndexError, KeyError) as err:
        raise DataError(f"{where}: malformed record: {err}") from err


def read_manifest(path: str | Path, check_files: bool = True) -> list[DatasetRecord]:
    """Parse a JSONL manifest of input records.

    Relative file references are resolved against the manifest's directory
    and stored resolved. Raises DataError with the offending line number or
    missing path.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"manifest not found: {path}")
    base = path.parent
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as err:
                raise DataError(f"{path}:{lineno}: invalid JSON: {err}") from err
            rec = _record_from_dict(obj, f"{path}:{lineno}")
            img = (base / rec.image_path).resolve()
            msk = (base / rec.myo_mask_path).resolve()
            if check_files:
                if not img.is_file():
                    raise DataError(f"{path}:{lineno}: referenced image missing: {img}")
                if not msk.is_file():
                    raise DataError(f"{path}:{lineno}: referenced mask missing: {msk}")
            records.append(DatasetRecord(
                image_path=str(img), myo_mask_path=str(msk),
                rvip_anterior=rec.rvip_anterior, rvip_inferior=rec.rvip_inferior,
                spacing_mm=rec.spacing_mm, slice_level=rec.slice_level,
                lge_negative=rec.lge_negative, patient_id=rec.patient_id,
            ))
    return records


def write_input_manifest(records: list[DatasetRecord], path: str | Path) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_json_dict()) + "\n")
    return path


# ---------------------------------------------------------------------------
# image formats
# ---------------------------------------------------------------------------

def save_image(img: GrayImage, path: str | Path) -> None:
    """Write a grayscale image; format chosen by extension (.png or .f32).

    PNG quantizes clip(v, 0, 1) to 16-bit codes round(v * 65535); F32 stores
    the raw values as 32-bit floats with spacing in the header.
    """
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".png":
        codes = np.round(np.clip(img.data, 0.0, 1.0) * 65535.0).astype(np.uint16)
        Image.fromarray(codes).save(path)
    elif suffix == ".f32":
        header = f"F32 {img.width} {img.height} {img.spacing[0]!r} {img.spacing[1]!r}\n"
        with open(path, "wb") as fh:
            fh.write(header.encode("ascii"))
            fh.write(img.data.astype("<f4").tobytes())
    else:
        raise DataError(f"unknown image extension {suffix!r} (use .png or .f32)")


def load_image(path: str | Path) -> GrayImage:
    """Read a PNG or F32 image; format detected from the file magic.

    PNG intensities are mapped to [0, 1] by the maximum code value and get
    nominal 1x1 spacing (spacing travels in the manifest); F32 restores the
    stored values and spacing.
    """
    path = Path(path)
    try:
        head = open(path, "rb").read(8)
    except OSError as err:
        raise DataError(f"cannot read image {path}: {err}") from err
    if head.startswith(_PNG_MAGIC):
        with Image.open(path) as im:
            arr = np.asarray(im)
        if arr.ndim != 2:
            raise DataError(f"{path}: expected single-channel grayscale PNG")
        max_code = 255.0 if arr.dtype == np.uint8 else 65535.0
        return GrayImage(arr.astype(np.float64) / max_code)
    if head.startswith(_F32_MAGIC):
        return _load_f32(path)
    raise DataError(f"{path}: unknown image format magic {head[:4]!r}")


def _load_f32(path: Path) -> GrayImage:
    with open(path, "rb") as fh:
        header = fh.readline()
        try:
            tag, w_s, h_s, sx_s, sy_s = header.decode("ascii").split()
            w, h = int(w_s), int(h_s)
            sx, sy = float(sx_s), float(sy_s)
        except (UnicodeDecodeError, ValueError) as err:
            raise DataError(f"{path}: malformed F32 header {header!r}") from err
        if tag != "F32" or w <= 0 or h <= 0:
            raise DataError(f"{path}: degenerate F32 dimensions {w}x{h}")
        payload = fh.read()
    expected = 4 * w * h
    if len(payload) != expected:
        raise DataError(f"{path}: truncated F32 payload ({len(payload)} of {expected} bytes)")
    data = np.frombuffer(payload, dtype="<f4").reshape(h, w).astype(np.float64)
    return GrayImage(data, (sx, sy))


def save_mask(mask: LabeledMask, path: str | Path) -> None:
    """Write a label mask as an 8-bit PNG whose code values ARE the labels."""
    if mask.labels.max(initial=0) > 255:
        raise DataError("mask labels exceed the 8-bit PNG alphabet")
    Image.fromarray(mask.labels.astype(np.uint8)).save(Path(path))


def load_mask(path: str | Path) -> LabeledMask:
    path = Path(path)
    with Image.open(path) as im:
        arr = np.asarray(im)
    if arr.ndim != 2:
        raise DataError(f"{path}: expected single-channel label PNG")
    return LabeledMask(arr.astype(np.int32))


# ---------------------------------------------------------------------------
# augmented output records
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Provenance:
    """Everything needed to regenerate a synthetic image from its source."""

    spec: ScarSpec
    params: ScarParams
    config_digest: str
    record_seed: int
    gate_draw: float


@dataclass(frozen=True)
class AugmentedRecord:
    """One output slice: image reference, caption, label, and provenance."""

    output_image_path: str
    caption: str
    label: str            # "positive" | "negative"
    synthetic: bool
    provenance: Provenance | None
    source: DatasetRecord

    def __post_init__(self):
        if self.synthetic != (self.provenance is not None) or self.synthetic != (self.label == "positive"):
            raise ValueError("synthetic flag, provenance and label must agree")

    def to_json_dict(self) -> dict:
        obj = {
            "output_image_path": self.output_image_path,
            "caption": self.caption,
            "label": self.label,
            "synthetic": self.synthetic,
            "provenance": None,
            "source": self.source.to_json_dict(),
        }
        if self.provenance is not None:
            p = self.provenance
            obj["provenance"] = {
                "spec": {
                    "location": {"base": p.spec.location.base, "axis": p.spec.location.axis},
                    "extent": p.spec.extent.value,
                    "level": p.spec.level.value,
                },
                "params": {
                    "center": [p.params.center.x, p.params.center.y],
                    "radii": [p.params.radii[0], p.params.radii[1]],
                    "alpha": p.params.alpha,
                    "sigma": p.params.sigma,
                    "gamma": p.params.gamma,
                    "seed": p.params.seed,
                },
                "config_digest": p.config_digest,
                "record_seed": p.record_seed,
                "gate_draw": p.gate_draw,
            }
        return obj


def _augmented_from_dict(obj: dict, where: str) -> AugmentedRecord:
    for field in ("output_image_path", "caption", "label", "synthetic", "source"):
        if field not in obj:
            raise DataError(f"{where}: missing field {field!r}")
    prov = None
    if obj.get("provenance") is not None:
        p = obj["provenance"]
        try:
            spec = ScarSpec(
                location=WallLocation(base=p["spec"]["location"]["base"],
                                      axis=p["spec"]["location"]["axis"]),
                extent=Extent(p["spec"]["extent"]),
                level=SliceLevel(p["spec"]["level"]),
            )
            params = ScarParams(
                center=Point2(float(p["params"]["center"][0]), float(p["params"]["center"][1])),
                radii=(float(p["params"]["radii"][0]), float(p["params"]["radii"][1])),
                alpha=float(p["params"]["alpha"]),
                sigma=float(p["params"]["sigma"]),
                gamma=float(p["params"]["gamma"]),
                seed=int(p["params"]["seed"]),
            )
            prov = Provenance(spec=spec, params=params,
                              config_digest=str(p["config_digest"]),
                              record_seed=int(p["record_seed"]),
                              gate_draw=float(p["gate_draw"]))
        except (TypeError, ValueError, KeyError, IndexError) as err:
            raise DataError(f"{where}: malformed provenance: {err}") from err
    source = _record_from_dict(obj["source"], where)
    try:
        return AugmentedRecord(
            output_image_path=str(obj["output_image_path"]),
            caption=str(obj["caption"]),
            label=str(obj["label"]),
            synthetic=bool(obj["synthetic"]),
            provenance=prov,
            source=source,
        )
    except ValueError as err:
        raise DataError(f"{where}: {err}") from err


def write_augmented(entries: list[tuple[AugmentedRecord, GrayImage]],
                    out_dir: str | Path) -> Path:
    """Write augmented images plus the JSONL manifest under `out_dir`.

    Each record's output_image_path is interpreted relative to `out_dir`;
    the manifest keeps input order.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest_path = out_dir / MANIFEST_NAME
    with open(manifest_path, "w", encoding="utf-8") as fh:
        for record, image in entries:
            target = out_dir / record.output_image_path
            target.parent.mkdir(parents=True, exist_ok=True)
            save_image(image, target)
            fh.write(json.dumps(record.to_json_dict()) + "\n")
    return manifest_path


def read_augmented_manifest(path: str | Path) -> list[AugmentedRecord]:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"manifest not found: {path}")
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as err:
                raise DataError(f"{path}:{lineno}: invalid JSON: {err}") from err
            records.append(_augmented_from_dict(obj, f"{path}:{lineno}"))
    return records


def dataset_hash(out_dir: str | Path) -> str:
    """Content hash of an emitted dataset: manifest bytes plus image bytes in
    manifest order."""
    out_dir = Path(out_dir)
    manifest_path = out_dir / MANIFEST_NAME
    if not manifest_path.is_file():
        raise DataError(f"no manifest in {out_dir}")
    digest = hashlib.sha256()
    digest.update(manifest_path.read_bytes())
    for record in read_augmented_manifest(manifest_path):
        img_path = out_dir / record.output_image_path
        if not img_path.is_file():
            raise DataError(f"manifest references missing image {img_path}")
        digest.update(img_path.read_bytes())
    return digest.hexdigest()
