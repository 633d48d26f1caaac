"""Command-line entry point: ``vtvkit <command> [options]``.

Every command takes ``--config FILE`` and repeatable ``--set key=value``
overrides; the named flags below are shortcuts for common keys. Each command
writes its artifacts plus ``run_report.json`` (parameters, results and
sha256 digests of every output) and ``timings.json`` into ``--out``.
Failures print one JSON error record on stderr and exit nonzero
(2 for configuration errors, 1 otherwise).
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np
from PIL import Image

from . import pipeline as pl
from .config import SCHEMA, load_config
from .core import (
    Manifest,
    ManifestEntry,
    SensorKind,
    load_annotation_file,
    load_video,
    save_annotation_file,
    save_video,
)
from .errors import ConfigError, MissingPath
from .flow import FLO_NAME, FlowField, write_flo
from .keyframe import MaskMap
from .qa import (
    DEFAULT_TEST_MIX,
    AnnotationTable,
    dataset_header,
    derive_seed,
    generate_pairs,
    load_annotations,
    split_disjoint,
    synthesize_annotations,
    to_jsonl,
    validate_distribution,
)
from .synth import Interaction, InteractionSpec, synth_sequence
from .tacforce import ForceField, spline_interpolate_field
from .tensorfile import read_tensor

# named flag -> config key
FLAG_KEYS = {
    "manifest": "manifest",
    "annotations": "annotations",
    "out": "output_dir",
    "seed": "seed",
    "epoch": "sampling.epoch",
    "alpha": "sampling.alpha",
    "beta": "sampling.beta",
    "lam": "sampling.lambda",
    "keyframe": "keyframe.strategy",
    "flow_provider": "flow.provider",
    "flow_dir": "flow.directory",
    "height": "normalize.height",
    "width": "normalize.width",
    "rho": "mask.rho",
    "tau": "leakage.tau",
    "window": "leakage.window",
    "count": "qa.count",
    "mix": "qa.mix",
    "held_out_objects": "qa.held_out_objects",
    "test_count": "qa.test_count",
    "tolerance": "qa.tolerance",
}

DEFAULT_AMPLITUDE = {"slide": 4.0, "rotate": 2.0, "press": 1.5}


def build_config(args):
    overrides = {}
    for item in args.set or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        overrides[key.strip()] = value.strip()
    for flag, key in FLAG_KEYS.items():
        value = getattr(args, flag, None)
        if value is not None:
            overrides[key] = value
    return load_config(args.config, overrides)


def _out_dir(cfg) -> Path:
    out = Path(cfg["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _video_and_key(args, cfg):
    path = Path(args.video)
    if not path.exists():
        raise MissingPath(str(path))
    key = args.key or (path.name if path.is_dir() else path.parent.name)
    video, k = pl.prepare(load_video(path), cfg)
    return video, k, key


def _report(out, command, cfg, results, started):
    return pl.write_report(out, command, cfg, results, {"total": time.perf_counter() - started})


# ----------------------------------------------------------------------------
# commands


def cmd_flow(args, cfg):
    started = time.perf_counter()
    out = _out_dir(cfg)
    video, k, key = _video_and_key(args, cfg)
    flows = pl.stage_flow(video, k, cfg, key, out)
    return _report(out, "flow", cfg, {"keyframe": k, "flows": len(flows)}, started)


def cmd_mask(args, cfg):
    started = time.perf_counter()
    out = _out_dir(cfg)
    video, k, key = _video_and_key(args, cfg)
    mask = pl.stage_mask(video.shape[0], video.shape[1], k, cfg, key, out)
    return _report(out, "mask", cfg, {"keyframe": k, "mask_mean": float(mask.values.mean())}, started)


def cmd_propagate(args, cfg):
    started = time.perf_counter()
    out = _out_dir(cfg)
    video, k, key = _video_and_key(args, cfg)
    flow_dir = Path(args.flows) if args.flows else out / "flows"
    flows = pl.read_flow_set(flow_dir, video.T, k)
    mask_path = Path(args.mask) if args.mask else out / "keyframe_mask.vtf"
    keyframe_mask = MaskMap(read_tensor(mask_path).astype(np.float64), k)
    masks = pl.stage_propagate(video, keyframe_mask, flows, out)
    return _report(out, "propagate", cfg, {"keyframe": k, "frames": len(masks)}, started)


def cmd_tokenize(args, cfg):
    started = time.perf_counter()
    out = _out_dir(cfg)
    key = args.key or Path(args.masks or out).resolve().parent.name
    masks = pl.load_masks(Path(args.masks) if args.masks else out / "masks.vtf")
    tokens, tube = pl.stage_tokenize(masks, cfg, key, out)
    return _report(out, "tokenize", cfg, {"token_grid": list(tokens.bits.shape),
                                          "masked_tokens": tokens.count}, started)


def cmd_leakage(args, cfg):
    started = time.perf_counter()
    out = _out_dir(cfg)
    video, _, _ = _video_and_key(args, cfg)
    geom = pl.geometry(cfg)
    tokens = pl.load_tokens(Path(args.tokens) if args.tokens else out / "tokens.vtf", cfg["mask.rho"], geom)
    tube = pl.load_tokens(Path(args.tube) if args.tube else out / "tube_tokens.vtf", cfg["mask.rho"], geom)
    doc = pl.stage_leakage(video, tokens, tube, cfg, out)
    return _report(out, "leakage", cfg, {"leakage_flow_guided": doc["flow_guided"]["leak_fraction"],
                                         "leakage_tube": doc["tube"]["leak_fraction"]}, started)


def cmd_pipeline(args, cfg):
    if not cfg["manifest"]:
        raise ConfigError("pipeline needs a manifest", "manifest")
    return pl.run_pipeline(cfg)


def heatmap(values) -> np.ndarray:
    """Map a 2-D array to RGB uint8 (dark blue -> red -> yellow), scaled to its max."""
    v = np.asarray(values, dtype=np.float64)
    top = v.max()
    s = v / top if top > 0 else np.zeros_like(v)
    r = np.clip(2.0 * s, 0, 1)
    g = np.clip(2.0 * s - 1.0, 0, 1)
    b = np.clip(0.5 - s, 0, 1) * 2 * 0.6
    return np.round(np.stack([r, g, b], axis=-1) * 255).astype(np.uint8)


def cmd_interp(args, cfg):
    started = time.perf_counter()
    out = _out_dir(cfg)
    field = ForceField.load(args.field)
    th = cfg["spline.height"] or None
    tw = cfg["spline.width"] or None
    up = spline_interpolate_field(field, th, tw)
    up.save(out / "force_field.vtf")
    Image.fromarray(heatmap(field.magnitude())).save(out / "magnitude_source.png")
    Image.fromarray(heatmap(up.magnitude())).save(out / "magnitude.png")
    return _report(out, "interp", cfg, {"source": list(field.resolution), "target": list(up.resolution)}, started)


def _table(args, cfg):
    ann_path = cfg["annotations"]
    if not ann_path and cfg["manifest"]:
        ann_path = str(Path(cfg["manifest"]).parent / "annotations.json")
    if not ann_path:
        raise ConfigError("an annotations file is required", "annotations")
    if not Path(ann_path).exists():
        raise MissingPath(ann_path)
    anns = load_annotation_file(ann_path)
    if cfg["manifest"]:
        return load_annotations(Manifest.load(cfg["manifest"]), anns)
    return AnnotationTable.from_annotations(anns, regions=args.regions)


def cmd_qagen(args, cfg):
    started = time.perf_counter()
    out = _out_dir(cfg)
    table = _table(args, cfg)
    mix = cfg["qa.mix"] or None
    seed, count = cfg["seed"], cfg["qa.count"]
    if args.splits:
        res = split_disjoint(table, count, count, cfg["qa.test_count"], seed,
                             cfg["qa.held_out_objects"], train_mix=mix)
        sizes = {}
        for name, pairs in (("stage2", res.stage2), ("stage3", res.stage3), ("test", res.test)):
            header = dataset_header(res.seeds[name], mix if name != "test" else DEFAULT_TEST_MIX, len(pairs), name)
            (out / f"{name}.jsonl").write_text(to_jsonl(pairs, header))
            sizes[name] = len(pairs)
        results = {"sizes": sizes, "held_out": res.held_out, "warnings": table.warnings}
    else:
        pairs = generate_pairs(table, mix, count, seed)
        (out / "dataset.jsonl").write_text(to_jsonl(pairs, dataset_header(seed, mix, count)))
        results = {"pairs": len(pairs), "warnings": table.warnings}
    return _report(out, "qagen", cfg, results, started)


def cmd_stats(args, cfg):
    started = time.perf_counter()
    out = _out_dir(cfg)
    report = validate_distribution(_table(args, cfg), tolerance=cfg["qa.tolerance"])
    (out / "distribution.csv").write_text(report.to_csv())
    results = {"passed": report.passed,
               "max_deviation": {c.attribute: c.max_deviation for c in report.checks}}
    print(("PASS" if report.passed else "FAIL") + f" distribution within {report.tolerance}")
    return _report(out, "stats", cfg, results, started)


def cmd_synth(args, cfg):
    """Write a fixture corpus: one directory per video plus manifest and annotations."""
    started = time.perf_counter()
    out = _out_dir(cfg)
    kinds = [Interaction(k.strip()) for k in args.kinds.split(",") if k.strip()]
    n_objects = len(kinds) * args.per_kind
    anns = synthesize_annotations(n_objects, seed=cfg["seed"])
    entries = []
    index = 0
    for kind in kinds:
        amp = args.amplitude if args.amplitude is not None else DEFAULT_AMPLITUDE[kind.value]
        for i in range(args.per_kind):
            spec = InteractionSpec(kind, amp, frames=args.frames,
                                   texture_seed=derive_seed(cfg["seed"], "texture", kind.value, i) % 2**32)
            video, flows = synth_sequence(spec, args.size, args.size)
            entry = ManifestEntry("", anns[index].object_id, 0, SensorKind.GELSIGHT_MINI, kind.value)
            key = pl.video_key(entry)
            vdir = out / key
            (vdir / "gt_flows").mkdir(parents=True, exist_ok=True)
            save_video(video, vdir / "video.vtf")
            for f in flows:
                write_flo(FlowField(f.u, f.v, f.src_index, f.dst_index),
                          vdir / "gt_flows" / FLO_NAME.format(f.src_index, f.dst_index))
            entries.append(ManifestEntry(f"{key}/video.vtf", entry.object_id, 0, entry.sensor, kind.value))
            index += 1
    Manifest(entries, str(out)).save(out / "manifest.json")
    save_annotation_file(out / "annotations.json", anns)
    return _report(out, "synth", cfg, {"videos": len(entries)}, started)


COMMANDS = {
    "synth": (cmd_synth, "render synthetic fixture videos, manifest and annotations"),
    "flow": (cmd_flow, "estimate the keyframe-directed flow set of one video"),
    "mask": (cmd_mask, "sample the Gaussian keyframe mask of one video"),
    "propagate": (cmd_propagate, "warp the keyframe mask to every frame"),
    "tokenize": (cmd_tokenize, "binarize propagated masks into token masks (plus tube baseline)"),
    "leakage": (cmd_leakage, "measure co-located leakage of token masks"),
    "interp": (cmd_interp, "spline-upsample a force field and render magnitude heatmaps"),
    "qagen": (cmd_qagen, "generate QA pairs (one dataset or stage2/stage3/test splits)"),
    "stats": (cmd_stats, "check annotation level proportions"),
    "pipeline": (cmd_pipeline, "run flow -> mask -> propagate -> tokenize -> leakage for every manifest video"),
}


def _common(p):
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config key")
    p.add_argument("--out", help="output directory")
    p.add_argument("--seed", type=int)
    p.add_argument("--manifest")
    p.add_argument("--annotations")


def build_parser() -> argparse.ArgumentParser:
    keys = "\n".join(f"  {k:<22} {spec[3]} (default {spec[1]!r})" for k, spec in SCHEMA.items())
    parser = argparse.ArgumentParser(
        prog="vtvkit", description="Flow-guided tactile video masking and dataset tools.",
        epilog="config keys:\n" + keys, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text, description=help_text)
        _common(p)
        if name in ("flow", "mask", "propagate", "leakage"):
            p.add_argument("--video", required=True, help="frame directory or tensor file")
        if name in ("flow", "mask", "propagate", "tokenize", "leakage"):
            p.add_argument("--key", help="video name used for seeding (default: its directory name)")
        if name in ("flow", "mask", "propagate", "leakage", "pipeline"):
            p.add_argument("--keyframe", choices=("middle", "max_contact"))
            p.add_argument("--height", type=int)
            p.add_argument("--width", type=int)
        if name in ("flow", "pipeline"):
            p.add_argument("--flow-provider", choices=("classical", "precomputed"))
            p.add_argument("--flow-dir")
        if name in ("mask", "pipeline"):
            p.add_argument("--alpha", type=float)
            p.add_argument("--beta", type=int)
            p.add_argument("--lam", type=float)
            p.add_argument("--epoch", type=int)
        if name in ("tokenize", "leakage", "pipeline"):
            p.add_argument("--rho", type=float)
        if name in ("leakage", "pipeline"):
            p.add_argument("--tau", type=float)
            p.add_argument("--window", type=int)
        if name == "propagate":
            p.add_argument("--flows", help="directory of .flo files (default: OUT/flows)")
            p.add_argument("--mask", help="keyframe mask tensor (default: OUT/keyframe_mask.vtf)")
        if name == "tokenize":
            p.add_argument("--masks", help="propagated mask tensor (default: OUT/masks.vtf)")
        if name == "leakage":
            p.add_argument("--tokens", help="token mask tensor (default: OUT/tokens.vtf)")
            p.add_argument("--tube", help="tube baseline tensor (default: OUT/tube_tokens.vtf)")
        if name == "interp":
            p.add_argument("--field", required=True, help="(3, H, W) force-field tensor file")
        if name in ("qagen", "stats"):
            p.add_argument("--regions", type=int, default=5,
                           help="regions per object when no manifest is given")
            p.add_argument("--tolerance", type=float)
        if name == "qagen":
            p.add_argument("--count", type=int)
            p.add_argument("--mix", help="task proportions, e.g. fas=0.5,sfd=0.5")
            p.add_argument("--splits", action="store_true", help="write stage2/stage3/test splits")
            p.add_argument("--held-out-objects", type=int)
            p.add_argument("--test-count", type=int)
        if name == "synth":
            p.add_argument("--kinds", default="slide,rotate,press")
            p.add_argument("--per-kind", type=int, default=2)
            p.add_argument("--amplitude", type=float, help="px/frame or deg/frame (default per kind)")
            p.add_argument("--frames", type=int, default=9)
            p.add_argument("--size", type=int, default=128)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = build_config(args)
        COMMANDS[args.command][0](args, cfg)
    except Exception as exc:  # noqa: BLE001 - every failure becomes one error record
        record = {"command": args.command, "error": type(exc).__name__, "message": str(exc)}
        if isinstance(exc, ConfigError):
            record["key"] = exc.key
        print(json.dumps(record, sort_keys=True), file=sys.stderr)
        return 2 if isinstance(exc, ConfigError) else 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
