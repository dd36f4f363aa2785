"""Command-line surface.

Subcommands: preprocess, segments, synth, score, validate (plus a hidden
phantom generator for fixtures and doc figures). Exit codes: 0 success,
1 usage error, 2 data error, 3 invariant violation.

Seed precedence: --seed flag > SCARFORGE_SEED environment variable > config
file > default 0. Other synthesis parameters come from the key=value config
file (see parse_config_text).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .anatomy import Extent, SliceLevel
from .contrastive import balanced_accuracy, zero_shot_decide
from .dataset import (
    DatasetRecord,
    MANIFEST_NAME,
    dataset_hash,
    read_manifest,
    save_image,
    save_mask,
    write_input_manifest,
)
from .errors import DataError, ScarforgeError
from .phantoms import make_annulus, place_rvips
from .pipeline import prepare_record, replay_dataset, synthesize_dataset, validate_dataset
from .raster import Point2
from .rng import SplitMix64
from .synth import DEFAULT_RHO, SynthConfig, build_anatomy_context

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INVARIANT = 3

_RHO_KEYS = {
    "rho_sub_endocardial": Extent.SUB_ENDOCARDIAL,
    "rho_mid_myocardial": Extent.MID_MYOCARDIAL,
    "rho_epicardial": Extent.EPICARDIAL,
    "rho_transmural": Extent.TRANSMURAL,
}


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse default exits with code 2
        raise _UsageError(message)


def parse_config_text(text: str) -> dict:
    """key = value lines mirroring SynthConfig fields.

    Keys: lambda, s1, s2, b1, b2, master_seed, and rho_<extent> with two
    comma- or space-separated floats (extents: sub_endocardial,
    mid_myocardial, epicardial, transmural). '#' starts a comment.
    """
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DataError(f"config line {lineno}: expected key = value, got {raw!r}")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        try:
            if key == "lambda":
                values["lam"] = float(val)
            elif key in ("s1", "s2", "b1", "b2"):
                values[key] = float(val)
            elif key == "master_seed":
                values["master_seed"] = int(val)
            elif key in _RHO_KEYS:
                parts = val.replace(",", " ").split()
                if len(parts) != 2:
                    raise ValueError(f"expected two values, got {val!r}")
                values.setdefault("rho", dict(DEFAULT_RHO))[_RHO_KEYS[key]] = \
                    (float(parts[0]), float(parts[1]))
            else:
                raise DataError(f"config line {lineno}: unknown key {key!r}")
        except ValueError as err:
            raise DataError(f"config line {lineno}: {err}") from err
    return values


def _load_config(path: str | None, seed_flag: int | None) -> SynthConfig:
    values: dict = {}
    if path is not None:
        cfg_path = Path(path)
        if not cfg_path.is_file():
            raise DataError(f"config file not found: {cfg_path}")
        values = parse_config_text(cfg_path.read_text(encoding="utf-8"))
    env_seed = os.environ.get("SCARFORGE_SEED")
    if env_seed is not None:
        try:
            values["master_seed"] = int(env_seed)
        except ValueError as err:
            raise DataError(f"SCARFORGE_SEED must be an integer, got {env_seed!r}") from err
    if seed_flag is not None:
        values["master_seed"] = seed_flag
    try:
        return SynthConfig(**values)
    except ValueError as err:
        raise DataError(f"invalid configuration: {err}") from err


def _build_parser() -> _Parser:
    parser = _Parser(prog="scarforge",
                     description="Deterministic synthetic myocardial-scar dataset tooling")
    sub = parser.add_subparsers(dest="command", required=True,
                                metavar="{preprocess,segments,synth,score,validate}")

    p = sub.add_parser("preprocess", help="resample/crop/normalize slices and standardize orientation")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("png", "f32"), default="png")

    p = sub.add_parser("segments", help="dump AHA segment and layer label maps for one record")
    p.add_argument("--record", type=int, required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("synth", help="run the full augmentation pipeline")
    p.add_argument("--manifest", required=True)
    p.add_argument("--config")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--replay", help="regenerate byte-identical images from an emitted manifest")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--format", choices=("png", "f32"), default="png")

    p = sub.add_parser("score", help="zero-shot decisions over embedding tables")
    p.add_argument("--image-emb", required=True)
    p.add_argument("--text-emb", required=True)
    p.add_argument("--labels")
    p.add_argument("--tau", type=float, default=1.0)

    p = sub.add_parser("validate", help="re-check invariants over an emitted dataset")
    p.add_argument("--out", required=True)

    # fixture generator, intentionally undocumented in --help output
    p = sub.add_parser("phantom")
    p.add_argument("--out", required=True)
    p.add_argument("--count", type=int, default=12)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--grid", type=int, default=160)
    p.add_argument("--spacing", type=float, default=1.5)

    return parser


# ---------------------------------------------------------------------------
# subcommand bodies
# ---------------------------------------------------------------------------

def _cmd_preprocess(args) -> int:
    records = read_manifest(args.manifest)
    out_dir = Path(args.out)
    (out_dir / "images").mkdir(parents=True, exist_ok=True)
    (out_dir / "masks").mkdir(parents=True, exist_ok=True)
    out_records = []
    for index, record in enumerate(records):
        prepared = prepare_record(record)
        img_name = f"images/{index:05d}.{args.format}"
        mask_name = f"masks/{index:05d}.png"
        save_image(prepared.image, out_dir / img_name)
        save_mask(prepared.myo_mask, out_dir / mask_name)
        out_records.append(DatasetRecord(
            image_path=img_name,
            myo_mask_path=mask_name,
            rvip_anterior=prepared.anterior,
            rvip_inferior=prepared.inferior,
            spacing_mm=prepared.image.spacing,
            slice_level=record.slice_level,
            lge_negative=record.lge_negative,
            patient_id=record.patient_id,
        ))
    write_input_manifest(out_records, out_dir / MANIFEST_NAME)
    print(f"preprocessed {len(out_records)} records into {out_dir}")
    return EXIT_OK


def _cmd_segments(args) -> int:
    records = read_manifest(args.manifest)
    if not (0 <= args.record < len(records)):
        raise DataError(f"record index {args.record} out of range (manifest has {len(records)})")
    prepared = prepare_record(records[args.record])
    ctx = build_anatomy_context(prepared)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    seg_path = out_dir / f"segments_{args.record:05d}.png"
    layer_path = out_dir / f"layers_{args.record:05d}.png"
    save_mask(ctx.segment_map, seg_path)
    save_mask(ctx.layer_map, layer_path)
    labels = sorted(int(v) for v in np.unique(ctx.segment_map.labels) if v != 0)
    print(f"wrote {seg_path} (labels {labels}) and {layer_path}")
    return EXIT_OK


def _cmd_synth(args) -> int:
    if args.jobs < 1:
        raise DataError(f"--jobs must be >= 1, got {args.jobs}")
    if args.replay:
        manifest = replay_dataset(args.replay, args.out, jobs=args.jobs)
        print(f"replayed dataset into {manifest.parent}")
    else:
        cfg = _load_config(args.config, args.seed)
        manifest = synthesize_dataset(args.manifest, cfg, args.out,
                                      jobs=args.jobs, image_format=args.format)
        print(f"synthesized dataset into {manifest.parent}")
    print(f"dataset hash {dataset_hash(Path(args.out))}")
    return EXIT_OK


def _read_embedding_table(path: str) -> np.ndarray:
    p = Path(path)
    if not p.is_file():
        raise DataError(f"embedding table not found: {p}")
    lines = [ln for ln in p.read_text(encoding="utf-8").splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("dim "):
        raise DataError(f"{p}: first line must be 'dim <p>'")
    try:
        dim = int(lines[0].split()[1])
    except (IndexError, ValueError) as err:
        raise DataError(f"{p}: malformed header {lines[0]!r}") from err
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split()
        if len(parts) != dim:
            raise DataError(f"{p}:{lineno}: expected {dim} values, got {len(parts)}")
        try:
            rows.append([float(v) for v in parts])
        except ValueError as err:
            raise DataError(f"{p}:{lineno}: {err}") from err
    if not rows:
        raise DataError(f"{p}: no embedding rows")
    return np.asarray(rows, dtype=np.float64)


def _read_labels(path: str, n: int) -> list[str]:
    p = Path(path)
    if not p.is_file():
        raise DataError(f"labels file not found: {p}")
    labels = []
    for lineno, line in enumerate(p.read_text(encoding="utf-8").splitlines(), start=1):
        token = line.strip().lower()
        if not token:
            continue
        if token in ("positive", "1", "true"):
            labels.append("positive")
        elif token in ("negative", "0", "false"):
            labels.append("negative")
        else:
            raise DataError(f"{p}:{lineno}: unknown label {line.strip()!r}")
    if len(labels) != n:
        raise DataError(f"{p}: {len(labels)} labels for {n} embeddings")
    return labels


def _cmd_score(args) -> int:
    images = _read_embedding_table(args.image_emb)
    texts = _read_embedding_table(args.text_emb)
    if texts.shape[0] != 2:
        raise DataError(f"text table must hold exactly two rows (positive, negative), got {texts.shape[0]}")
    if texts.shape[1] != images.shape[1]:
        raise DataError(f"dimension mismatch: images are {images.shape[1]}-d, texts {texts.shape[1]}-d")
    if args.tau <= 0:
        raise DataError(f"--tau must be positive, got {args.tau}")
    preds = []
    for i in range(images.shape[0]):
        label, margin = zero_shot_decide(images[i], texts[0], texts[1])
        preds.append(label)
        print(f"{i}\t{label}\t{margin / args.tau:.9g}")
    if args.labels:
        truth = _read_labels(args.labels, images.shape[0])
        print(f"balanced_accuracy\t{balanced_accuracy(preds, truth):.6f}")
    return EXIT_OK


def _cmd_validate(args) -> int:
    out_dir = Path(args.out)
    problems, content = validate_dataset(out_dir)
    print(f"dataset hash {content}")
    if problems:
        for problem in problems:
            print(f"VIOLATION: {problem}")
        return EXIT_INVARIANT
    print("all invariants hold")
    return EXIT_OK


def _cmd_phantom(args) -> int:
    out_dir = Path(args.out)
    (out_dir / "images").mkdir(parents=True, exist_ok=True)
    (out_dir / "masks").mkdir(parents=True, exist_ok=True)
    rng = SplitMix64(args.seed)
    levels = (SliceLevel.BASAL, SliceLevel.MID, SliceLevel.APICAL)
    records = []
    for i in range(args.count):
        g = args.grid
        cx = g / 2 + rng.uniform(-g * 0.05, g * 0.05)
        cy = g / 2 + rng.uniform(-g * 0.05, g * 0.05)
        r_outer = rng.uniform(g * 0.17, g * 0.24)
        r_inner = r_outer - rng.uniform(g * 0.055, g * 0.09)
        center = Point2(cx, cy)
        image, mask = make_annulus(center, r_inner, r_outer, (g, g),
                                   base_intensity=0.6, noise_sigma=0.02, rng=rng,
                                   spacing=(args.spacing, args.spacing))
        anterior, inferior = place_rvips(center, (r_inner + r_outer) / 2,
                                         rng.uniform(-np.pi, np.pi),
                                         rng.uniform(1.7, 2.4))
        img_name = f"images/{i:05d}.png"
        mask_name = f"masks/{i:05d}.png"
        save_image(image, out_dir / img_name)
        save_mask(mask, out_dir / mask_name)
        records.append(DatasetRecord(
            image_path=img_name, myo_mask_path=mask_name,
            rvip_anterior=anterior, rvip_inferior=inferior,
            spacing_mm=(args.spacing, args.spacing),
            slice_level=levels[i % 3], lge_negative=True,
            patient_id=f"PH{i:04d}",
        ))
    manifest = write_input_manifest(records, out_dir / MANIFEST_NAME)
    print(f"wrote {len(records)} phantom records to {manifest}")
    return EXIT_OK


_COMMANDS = {
    "preprocess": _cmd_preprocess,
    "segments": _cmd_segments,
    "synth": _cmd_synth,
    "score": _cmd_score,
    "validate": _cmd_validate,
    "phantom": _cmd_phantom,
}


def run(argv: list[str] | None = None) -> int:
    """Parse arguments and run one subcommand; returns the exit code."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as err:
        print(f"usage error: {err}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        return _COMMANDS[args.command](args)
    except DataError as err:
        print(f"data error: {err}", file=sys.stderr)
        return EXIT_DATA
    except ScarforgeError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_DATA
    except OSError as err:
        print(f"i/o error: {err}", file=sys.stderr)
        return EXIT_DATA


def main() -> None:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    sys.exit(run())


if __name__ == "__main__":
    main()
