import json

import numpy as np
import pytest

from scarforge.cli import EXIT_DATA, EXIT_INVARIANT, EXIT_OK, EXIT_USAGE, parse_config_text, run
from scarforge.anatomy import Extent
from scarforge.dataset import dataset_hash, load_mask, read_augmented_manifest
from scarforge.errors import DataError


@pytest.fixture(scope="module")
def phantom_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("phantom")
    assert run(["phantom", "--out", str(d), "--count", "9", "--seed", "17"]) == EXIT_OK
    return d


def test_usage_errors():
    assert run([]) == EXIT_USAGE
    assert run(["synth", "--bogus-flag"]) == EXIT_USAGE
    assert run(["definitely-not-a-command"]) == EXIT_USAGE


def test_config_parsing():
    text = """
    # comment line
    lambda = 0.5
    s1 = 1.5
    b1 = 0.7   # trailing comment
    rho_transmural = 0.6, 0.9
    master_seed = 42
    """
    values = parse_config_text(text)
    assert values["lam"] == 0.5
    assert values["s1"] == 1.5
    assert values["rho"][Extent.TRANSMURAL] == (0.6, 0.9)
    assert values["master_seed"] == 42
    with pytest.raises(DataError):
        parse_config_text("unknown_key = 3")
    with pytest.raises(DataError):
        parse_config_text("just some text")


def test_synth_and_validate(phantom_dir, tmp_path):
    manifest = str(phantom_dir / "manifest.jsonl")
    out = tmp_path / "ds"
    assert run(["synth", "--manifest", manifest, "--out", str(out), "--seed", "3"]) == EXIT_OK
    records = read_augmented_manifest(out / "manifest.jsonl")
    assert len(records) == 9
    assert any(r.synthetic for r in records)
    assert run(["validate", "--out", str(out)]) == EXIT_OK


def test_synth_seed_changes_output(phantom_dir, tmp_path):
    manifest = str(phantom_dir / "manifest.jsonl")
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(["synth", "--manifest", manifest, "--out", str(a), "--seed", "3"]) == EXIT_OK
    assert run(["synth", "--manifest", manifest, "--out", str(b), "--seed", "4"]) == EXIT_OK
    assert dataset_hash(a) != dataset_hash(b)


def test_seed_precedence(phantom_dir, tmp_path, monkeypatch):
    manifest = str(phantom_dir / "manifest.jsonl")
    cfg = tmp_path / "cfg.txt"
    cfg.write_text("master_seed = 1\n")
    # env overrides the file
    monkeypatch.setenv("SCARFORGE_SEED", "2")
    env_out = tmp_path / "env"
    assert run(["synth", "--manifest", manifest, "--config", str(cfg),
                "--out", str(env_out)]) == EXIT_OK
    plain2 = tmp_path / "plain2"
    monkeypatch.delenv("SCARFORGE_SEED")
    assert run(["synth", "--manifest", manifest, "--out", str(plain2), "--seed", "2"]) == EXIT_OK
    assert dataset_hash(env_out) == dataset_hash(plain2)
    # flag overrides the env
    monkeypatch.setenv("SCARFORGE_SEED", "1")
    flag_out = tmp_path / "flag"
    assert run(["synth", "--manifest", manifest, "--config", str(cfg),
                "--out", str(flag_out), "--seed", "2"]) == EXIT_OK
    assert dataset_hash(flag_out) == dataset_hash(plain2)


def test_replay_regenerates(phantom_dir, tmp_path):
    manifest = str(phantom_dir / "manifest.jsonl")
    first = tmp_path / "first"
    again = tmp_path / "again"
    assert run(["synth", "--manifest", manifest, "--out", str(first), "--seed", "11"]) == EXIT_OK
    assert run(["synth", "--manifest", manifest, "--out", str(again),
                "--replay", str(first / "manifest.jsonl")]) == EXIT_OK
    assert dataset_hash(first) == dataset_hash(again)


def test_validate_detects_tampering(phantom_dir, tmp_path):
    manifest = str(phantom_dir / "manifest.jsonl")
    out = tmp_path / "ds"
    assert run(["synth", "--manifest", manifest, "--out", str(out), "--seed", "3"]) == EXIT_OK
    # corrupt one caption
    lines = (out / "manifest.jsonl").read_text().splitlines()
    obj = json.loads(lines[0])
    obj["caption"] = "this is not in the grammar"
    lines[0] = json.dumps(obj)
    (out / "manifest.jsonl").write_text("\n".join(lines) + "\n")
    assert run(["validate", "--out", str(out)]) == EXIT_INVARIANT


def test_validate_detects_image_tampering(phantom_dir, tmp_path):
    manifest = str(phantom_dir / "manifest.jsonl")
    out = tmp_path / "ds"
    assert run(["synth", "--manifest", manifest, "--out", str(out), "--seed", "3"]) == EXIT_OK
    records = read_augmented_manifest(out / "manifest.jsonl")
    target = next(r for r in records if r.synthetic)
    from scarforge.dataset import load_image, save_image
    from scarforge.raster import GrayImage
    img = load_image(out / target.output_image_path)
    data = img.data.copy()
    data[0, 0] = min(1.0, data[0, 0] + 0.5)
    save_image(GrayImage(data, img.spacing), out / target.output_image_path)
    assert run(["validate", "--out", str(out)]) == EXIT_INVARIANT


def test_segments_subcommand(phantom_dir, tmp_path):
    manifest = str(phantom_dir / "manifest.jsonl")
    out = tmp_path / "maps"
    # record 2 is apical in the phantom cycle (basal, mid, apical, ...)
    assert run(["segments", "--record", "2", "--manifest", manifest,
                "--out", str(out)]) == EXIT_OK
    seg = load_mask(out / "segments_00002.png")
    labels = set(np.unique(seg.labels)) - {0}
    assert labels == {13, 14, 15, 16}
    layers = load_mask(out / "layers_00002.png")
    assert set(np.unique(layers.labels)) - {0} <= {1, 2, 3}
    assert run(["segments", "--record", "99", "--manifest", manifest,
                "--out", str(out)]) == EXIT_DATA


def test_preprocess_subcommand(phantom_dir, tmp_path):
    manifest = str(phantom_dir / "manifest.jsonl")
    out = tmp_path / "prep"
    assert run(["preprocess", "--manifest", manifest, "--out", str(out)]) == EXIT_OK
    from scarforge.dataset import read_manifest
    records = read_manifest(out / "manifest.jsonl")
    assert len(records) == 9
    assert records[0].spacing_mm == (0.5, 0.5)
    from scarforge.dataset import load_image
    img = load_image(records[0].image_path)
    assert (img.width, img.height) == (224, 224)


def test_score_subcommand(tmp_path, capsys):
    img_table = tmp_path / "img.txt"
    txt_table = tmp_path / "txt.txt"
    labels = tmp_path / "labels.txt"
    img_table.write_text("dim 2\n1.0 0.1\n0.1 1.0\n0.9 0.0\n")
    txt_table.write_text("dim 2\n1.0 0.0\n0.0 1.0\n")
    labels.write_text("positive\nnegative\npositive\n")
    assert run(["score", "--image-emb", str(img_table), "--text-emb", str(txt_table),
                "--labels", str(labels)]) == EXIT_OK
    out = capsys.readouterr().out
    lines = out.strip().splitlines()
    assert lines[0].startswith("0\tpositive")
    assert lines[1].startswith("1\tnegative")
    assert lines[2].startswith("2\tpositive")
    assert "balanced_accuracy\t1.000000" in lines[3]


def test_score_row_count_mismatch(tmp_path):
    img_table = tmp_path / "img.txt"
    txt_table = tmp_path / "txt.txt"
    img_table.write_text("dim 2\n1.0 0.0\n")
    txt_table.write_text("dim 2\n1.0 0.0\n0.0 1.0\n0.5 0.5\n")
    assert run(["score", "--image-emb", str(img_table),
                "--text-emb", str(txt_table)]) == EXIT_DATA
    # dimension mismatch inside a row
    bad = tmp_path / "bad.txt"
    bad.write_text("dim 3\n1.0 0.0\n")
    assert run(["score", "--image-emb", str(bad), "--text-emb", str(txt_table)]) == EXIT_DATA


def test_jobs_flag_output_independent(phantom_dir, tmp_path):
    manifest = str(phantom_dir / "manifest.jsonl")
    a, b = tmp_path / "j1", tmp_path / "j4"
    assert run(["synth", "--manifest", manifest, "--out", str(a), "--seed", "8",
                "--jobs", "1"]) == EXIT_OK
    assert run(["synth", "--manifest", manifest, "--out", str(b), "--seed", "8",
                "--jobs", "4"]) == EXIT_OK
    assert dataset_hash(a) == dataset_hash(b)
