"""End-to-end record processing: prepare, augment, replay, validate.

Per-record work is pure, so records may run in parallel; outputs depend only
on (master seed, record index) and the input files, never on scheduling.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .anatomy import candidate_region, location_to_segments
from .captions import parse_caption
from .dataset import (
    MANIFEST_NAME,
    AugmentedRecord,
    DatasetRecord,
    Provenance,
    dataset_hash,
    load_image,
    load_mask,
    read_augmented_manifest,
    read_manifest,
    write_augmented,
)
from .errors import DataError, EmptyCandidateError
from .orientation import normalize_orientation
from .preprocess import preprocess
from .raster import GrayImage, centroid
from .synth import (
    AugmentResult,
    PreparedSlice,
    SynthConfig,
    augment_record,
    build_anatomy_context,
    realize_scar_field,
    blend,
)

log = logging.getLogger(__name__)


def prepare_record(record: DatasetRecord) -> PreparedSlice:
    """Load one input record and run preprocessing plus orientation
    normalization."""
    raw = load_image(record.image_path)
    image = GrayImage(raw.data, record.spacing_mm)
    mask = load_mask(record.myo_mask_path)
    pre = preprocess(image, mask, (record.rvip_anterior, record.rvip_inferior))
    center = centroid(pre.myo_mask, label=1)
    img, masks, anterior, inferior, _ = normalize_orientation(
        pre.image, [pre.myo_mask], pre.anterior, pre.inferior, center)
    return PreparedSlice(
        image=img,
        myo_mask=masks[0],
        anterior=anterior,
        inferior=inferior,
        level=record.slice_level,
        lge_negative=record.lge_negative,
    )


def _image_name(index: int, image_format: str) -> str:
    return f"images/{index:05d}.{image_format}"


def _process_one(record: DatasetRecord, index: int, cfg: SynthConfig,
                 image_format: str) -> tuple[AugmentedRecord, GrayImage]:
    prepared = prepare_record(record)
    result = augment_record(prepared, cfg, index)
    return _to_augmented(record, result, index, cfg, image_format)


def _to_augmented(record: DatasetRecord, result: AugmentResult, index: int,
                  cfg: SynthConfig, image_format: str) -> tuple[AugmentedRecord, GrayImage]:
    provenance = None
    if result.synthetic:
        provenance = Provenance(spec=result.spec, params=result.params,
                                config_digest=cfg.digest(), record_seed=result.seed,
                                gate_draw=result.gate_draw)
    out = AugmentedRecord(
        output_image_path=_image_name(index, image_format),
        caption=result.caption.text,
        label=result.caption.label,
        synthetic=result.synthetic,
        provenance=provenance,
        source=record,
    )
    return out, result.image


def synthesize_dataset(manifest_path: str | Path, cfg: SynthConfig, out_dir: str | Path,
                       jobs: int = 1, image_format: str = "png") -> Path:
    """Run the full augmentation pipeline over an input manifest.

    LGE-positive records are skipped (the scar pipeline only consumes
    negatives); their indices are preserved so per-record seeds of the
    remaining records do not shift.
    """
    records = read_manifest(manifest_path)
    tasks = []
    for index, record in enumerate(records):
        if not record.lge_negative:
            log.warning("record %d (%s) is LGE-positive; skipped", index, record.patient_id)
            continue
        tasks.append((index, record))
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            entries = list(pool.map(
                lambda t: _process_one(t[1], t[0], cfg, image_format), tasks))
    else:
        entries = [_process_one(rec, idx, cfg, image_format) for idx, rec in tasks]
    return write_augmented(entries, out_dir)


def regenerate_from_provenance(record: AugmentedRecord) -> GrayImage:
    """Rebuild one output image from its manifest line plus the source files."""
    prepared = prepare_record(record.source)
    if not record.synthetic:
        return prepared.image
    prov = record.provenance
    ctx = build_anatomy_context(prepared)
    segments = location_to_segments(prov.spec.location, prov.spec.level)
    cand = candidate_region(prepared.myo_mask, segments, prov.spec.extent,
                            ctx.segment_map, ctx.layer_map)
    field = realize_scar_field(cand, prepared.myo_mask, prov.params.center,
                               prov.params.radii, prov.params.alpha, prov.params.sigma)
    return blend(prepared.image, field, prov.params.gamma)


def replay_dataset(replay_manifest: str | Path, out_dir: str | Path,
                   jobs: int = 1) -> Path:
    """Regenerate a dataset byte-for-byte from an emitted manifest's
    provenance (no random draws)."""
    records = read_augmented_manifest(replay_manifest)
    fmt_entries = []
    for record in records:
        suffix = Path(record.output_image_path).suffix.lstrip(".")
        fmt_entries.append((record, suffix))

    def rebuild(item):
        record, _ = item
        return record, regenerate_from_provenance(record)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            entries = list(pool.map(rebuild, fmt_entries))
    else:
        entries = [rebuild(item) for item in fmt_entries]
    return write_augmented(entries, out_dir)


def validate_dataset(out_dir: str | Path) -> tuple[list[str], str]:
    """Re-check invariants over an emitted dataset.

    Returns (problems, content_hash). Checked per record: the image loads
    with intensities in [0, 1]; the caption parses and matches the stored
    label/provenance; synthetic <=> provenance <=> positive label; synthetic
    images regenerate byte-identically with the field confined to the
    myocardium and the center inside its candidate region.
    """
    out_dir = Path(out_dir)
    manifest_path = out_dir / MANIFEST_NAME
    problems: list[str] = []
    records = read_augmented_manifest(manifest_path)
    for lineno, record in enumerate(records, start=1):
        where = f"record {lineno}"
        img_path = out_dir / record.output_image_path
        if not img_path.is_file():
            problems.append(f"{where}: missing image {img_path}")
            continue
        image = load_image(img_path)
        if image.data.min() < 0.0 or image.data.max() > 1.0 + 1e-9:
            problems.append(f"{where}: intensities outside [0, 1]")
        try:
            caption = parse_caption(record.caption)
        except Exception as err:
            problems.append(f"{where}: caption does not parse: {err}")
            continue
        if caption.label != record.label:
            problems.append(f"{where}: caption label {caption.label!r} != stored {record.label!r}")
        if caption.level != record.source.slice_level:
            problems.append(f"{where}: caption level does not match the source record")
        if record.synthetic:
            if caption.spec != record.provenance.spec:
                problems.append(f"{where}: caption spec does not match provenance")
            problems.extend(_check_synthetic(record, out_dir, where))
    content = dataset_hash(out_dir)
    return problems, content


def _check_synthetic(record: AugmentedRecord, out_dir: Path, where: str) -> list[str]:
    problems = []
    prov = record.provenance
    try:
        prepared = prepare_record(record.source)
    except (DataError, OSError) as err:
        return [f"{where}: cannot prepare source for regeneration: {err}"]
    ctx = build_anatomy_context(prepared)
    segments = location_to_segments(prov.spec.location, prov.spec.level)
    try:
        cand = candidate_region(prepared.myo_mask, segments, prov.spec.extent,
                                ctx.segment_map, ctx.layer_map)
    except EmptyCandidateError as err:
        return [f"{where}: candidate region vanished on regeneration: {err}"]
    cx = int(round(prov.params.center.x))
    cy = int(round(prov.params.center.y))
    if cand.labels[cy, cx] == 0:
        problems.append(f"{where}: stored center is outside its candidate region")
    field = realize_scar_field(cand, prepared.myo_mask, prov.params.center,
                               prov.params.radii, prov.params.alpha, prov.params.sigma)
    if field.data.min() < 0.0 or field.data.max() > 1.0:
        problems.append(f"{where}: regenerated field leaves [0, 1]")
    outside = (prepared.myo_mask.labels == 0) & (field.data > 0)
    if outside.any():
        problems.append(f"{where}: regenerated field spills outside the myocardium")
    regenerated = blend(prepared.image, field, prov.params.gamma)
    stored_bytes = (out_dir / record.output_image_path).read_bytes()
    rebuilt = _encode_like(regenerated, out_dir / record.output_image_path)
    if rebuilt != stored_bytes:
        problems.append(f"{where}: regenerated image differs from the stored bytes")
    return problems


def _encode_like(image: GrayImage, reference_path: Path) -> bytes:
    """Serialize `image` with the same codec as the stored file and return
    the bytes."""
    import tempfile

    from .dataset import save_image

    with tempfile.TemporaryDirectory() as tmp:
        target = Path(tmp) / f"img{reference_path.suffix}"
        save_image(image, target)
        return target.read_bytes()
