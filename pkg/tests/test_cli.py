import hashlib
import json
from pathlib import Path

import numpy as np
import pytest

from vtvkit.cli import main
from vtvkit.config import SCHEMA, load_config, parse_config_text
from vtvkit.core import Manifest, ManifestEntry, save_annotation_file
from vtvkit.pipeline import video_key
from vtvkit.errors import ConfigError
from vtvkit.qa import synthesize_annotations
from vtvkit.tacforce import ForceField

SMALL = ["--height", "64", "--width", "64"]


def _tree(root, skip=("run_report.json", "timings.json")):
    root = Path(root)
    return {p.relative_to(root).as_posix(): p.read_bytes()
            for p in sorted(root.rglob("*")) if p.is_file() and p.name not in skip}


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    out = tmp_path_factory.mktemp("corpus")
    assert main(["synth", "--out", str(out), "--kinds", "slide,press", "--per-kind", "1",
                 "--frames", "5", "--size", "64"]) == 0
    return out


# ---------------------------------------------------------------- config

def test_config_file_and_overrides(tmp_path):
    cfg_file = tmp_path / "run.cfg"
    cfg_file.write_text("schema_version = 1\n# comment\nsampling.alpha = 0.3\nseed = 4\n")
    cfg = load_config(cfg_file, {"seed": "9"})
    assert cfg["sampling.alpha"] == 0.3 and cfg["seed"] == 9
    assert cfg["sampling.beta"] == SCHEMA["sampling.beta"][1]
    assert parse_config_text(cfg.to_text()) == {k: str(v) for k, v in cfg.items()}


@pytest.mark.parametrize("key,value", [("sampling.alpha", "1.5"), ("mask.rho", "0"), ("flow.provider", "raft"),
                                       ("bogus.key", "1"), ("schema_version", "2"), ("seed", "x")])
def test_config_rejects(key, value):
    with pytest.raises(ConfigError) as info:
        load_config(None, {key: value})
    assert info.value.key == key


def test_pipeline_bad_alpha_names_key(corpus, tmp_path, capsys):
    code = main(["pipeline", "--manifest", str(corpus / "manifest.json"), "--out", str(tmp_path), "--alpha", "1.5"])
    assert code == 2
    record = json.loads(capsys.readouterr().err.strip())
    assert record["error"] == "ConfigError" and record["key"] == "sampling.alpha"


def test_missing_input_error_record(tmp_path, capsys):
    assert main(["flow", "--video", str(tmp_path / "nope.vtf"), "--out", str(tmp_path)]) == 1
    record = json.loads(capsys.readouterr().err.strip())
    assert record["command"] == "flow" and record["error"] == "MissingPath"


# ---------------------------------------------------------------- pipeline

def test_pipeline_outputs_and_digests(corpus, tmp_path):
    out = tmp_path / "run"
    assert main(["pipeline", "--manifest", str(corpus / "manifest.json"), "--out", str(out), *SMALL]) == 0
    report = json.loads((out / "run_report.json").read_text())
    keys = list(report["results"]["videos"])
    assert any(k.endswith("_slide") for k in keys)
    vdir = out / "videos" / keys[0]
    for name in ("tokens.vtf", "tokens.vtf.json", "tube_tokens.vtf", "leakage.json", "masks.vtf",
                 "keyframe_mask.pgm", "keyframe_mask.vtf"):
        assert (vdir / name).exists(), name
    assert len(list((vdir / "overlays").glob("*.png"))) == 5
    assert len(list((vdir / "flows").glob("*.flo"))) == 4
    for rel, digest in report["outputs"].items():
        assert hashlib.sha256((out / rel).read_bytes()).hexdigest() == digest
    assert "total" not in report and (out / "timings.json").exists()


def test_pipeline_equals_stepwise_commands(corpus, tmp_path):
    out = tmp_path / "run"
    assert main(["pipeline", "--manifest", str(corpus / "manifest.json"), "--out", str(out), *SMALL,
                 "--seed", "3"]) == 0
    key = next(p.name for p in corpus.iterdir() if p.name.endswith("_slide"))
    step = tmp_path / "step"
    video = str(corpus / key / "video.vtf")
    common = ["--out", str(step), "--seed", "3"]
    assert main(["flow", "--video", video, *common, *SMALL]) == 0
    assert main(["mask", "--video", video, *common, *SMALL]) == 0
    assert main(["propagate", "--video", video, *common, *SMALL]) == 0
    assert main(["tokenize", "--key", key, *common]) == 0
    assert main(["leakage", "--video", video, *common, *SMALL]) == 0
    assert _tree(step) == _tree(out / "videos" / key)


def test_precomputed_flow_provider(corpus, tmp_path):
    manifest = Manifest.load(corpus / "manifest.json")
    slide = [ManifestEntry(str(manifest.resolve(e)), e.object_id, e.region_id, e.sensor, e.interaction)
             for e in manifest.entries if e.interaction.value == "slide"]
    Manifest(slide).save(tmp_path / "slide.json")
    key = video_key(slide[0])
    a, flows = tmp_path / "a", tmp_path / "flows"
    m = str(tmp_path / "slide.json")
    assert main(["pipeline", "--manifest", m, "--out", str(a), *SMALL]) == 0
    flows.mkdir()
    (a / "videos" / key / "flows").rename(flows / key)
    b = tmp_path / "b"
    assert main(["pipeline", "--manifest", m, "--out", str(b), *SMALL, "--flow-provider", "precomputed",
                 "--flow-dir", str(flows)]) == 0
    # feeding back the estimator's own flows must reproduce the same masks
    assert (a / "videos" / key / "masks.vtf").read_bytes() == (b / "videos" / key / "masks.vtf").read_bytes()


# ---------------------------------------------------------------- other commands

def test_qagen_and_stats(tmp_path):
    anns = tmp_path / "anns.json"
    save_annotation_file(anns, synthesize_annotations(40, seed=0))
    for d in ("a", "b"):
        assert main(["qagen", "--annotations", str(anns), "--count", "300", "--seed", "7",
                     "--out", str(tmp_path / d)]) == 0
    assert (tmp_path / "a" / "dataset.jsonl").read_bytes() == (tmp_path / "b" / "dataset.jsonl").read_bytes()
    assert main(["qagen", "--annotations", str(anns), "--count", "100", "--splits", "--test-count", "30",
                 "--held-out-objects", "6", "--out", str(tmp_path / "s")]) == 0
    sizes = json.loads((tmp_path / "s" / "run_report.json").read_text())["results"]["sizes"]
    assert sizes == {"stage2": 100, "stage3": 100, "test": 30}
    assert main(["stats", "--annotations", str(anns), "--out", str(tmp_path / "st")]) == 0
    assert (tmp_path / "st" / "distribution.csv").exists()


def test_interp_command(tmp_path):
    ForceField(*np.random.default_rng(0).normal(size=(3, 6, 5))).save(tmp_path / "f.vtf")
    assert main(["interp", "--field", str(tmp_path / "f.vtf"), "--out", str(tmp_path / "o")]) == 0
    assert ForceField.load(tmp_path / "o" / "force_field.vtf").resolution == (24, 20)
    assert (tmp_path / "o" / "magnitude.png").exists()
