"""Per-video masking pipeline: flow -> keyframe mask -> propagation -> tokens -> leakage.

Every stage writes fixed file names into its output directory, so running
the stages one by one produces the same files as ``run_video``.
"""
from __future__ import annotations

import hashlib
import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
from PIL import Image

from .config import PipelineConfig
from .core import Manifest, VideoSequence, load_annotation_file, load_video, validate_manifest
from .flow import (
    FLO_NAME,
    ClassicalPyramidal,
    FlowParams,
    FlowSet,
    Precomputed,
    bidirectional_flow_set,
    compose_to_keyframe,
    normalize_spatial,
    read_flo,
    write_flo,
)
from .keyframe import MaskMap, SamplingConfig, gaussian_mask, sample_points, select_keyframe, write_pgm16
from .propagate import (
    TokenMask,
    TubeletGeometry,
    binarize_tokens,
    leakage,
    overlay,
    propagate_mask,
    tube_mask,
)
from .qa import derive_seed
from .tensorfile import read_tensor, write_tensor

REPORT_NAME = "run_report.json"
TIMINGS_NAME = "timings.json"


def video_key(entry) -> str:
    return f"{entry.object_id}_r{entry.region_id}_{entry.sensor.value}_{entry.interaction.value}"


def worker_count() -> int:
    try:
        n = int(os.environ.get("VTV_THREADS", "0"))
    except ValueError:
        n = 0
    return n if n > 0 else min(4, os.cpu_count() or 1)


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def digest_tree(root) -> dict:
    root = Path(root)
    out = {}
    for p in sorted(root.rglob("*")):
        if p.is_file() and p.name not in (REPORT_NAME, TIMINGS_NAME):
            out[p.relative_to(root).as_posix()] = sha256_file(p)
    return out


def write_json(path, doc) -> None:
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def write_report(out_dir, command: str, cfg: PipelineConfig, results: dict, timings: dict | None = None) -> dict:
    """Write ``run_report.json`` (parameters, results, output digests) and ``timings.json``."""
    report = {
        "schema_version": 1,
        "command": command,
        # the output directory is left out so reruns elsewhere stay byte-identical
        "parameters": {k: v for k, v in cfg.items() if k != "output_dir"},
        "results": results,
        "outputs": digest_tree(out_dir),
    }
    write_json(Path(out_dir) / REPORT_NAME, report)
    if timings is not None:
        write_json(Path(out_dir) / TIMINGS_NAME, timings)
    return report


# ----------------------------------------------------------------------------
# config helpers


def flow_params(cfg) -> FlowParams:
    return FlowParams(cfg["flow.pyramid_levels"], cfg["flow.iterations"], cfg["flow.window_radius"])


def flow_provider(cfg, key: str):
    if cfg["flow.provider"] == "precomputed":
        return Precomputed(Path(cfg["flow.directory"]) / key)
    return ClassicalPyramidal(flow_params(cfg))


def sampling_config(cfg, key: str) -> SamplingConfig:
    lam = cfg["sampling.lambda"] or None
    seed = derive_seed(cfg["seed"], key, cfg["sampling.epoch"])
    return SamplingConfig(cfg["sampling.alpha"], cfg["sampling.beta"], lam, seed)


def geometry(cfg) -> TubeletGeometry:
    return TubeletGeometry(cfg["tubelet.t_patch"], cfg["tubelet.patch"])


def prepare(video: VideoSequence, cfg) -> tuple:
    v = normalize_spatial(video, cfg["normalize.height"], cfg["normalize.width"])
    return v, select_keyframe(v, cfg["keyframe.strategy"])


# ----------------------------------------------------------------------------
# stages


def stage_flow(video, k, cfg, key, out_dir) -> FlowSet:
    flows = bidirectional_flow_set(video, k, flow_provider(cfg, key))
    d = Path(out_dir) / "flows"
    d.mkdir(parents=True, exist_ok=True)
    for f in flows:
        write_flo(f, d / FLO_NAME.format(f.src_index, f.dst_index))
    return flows


def read_flow_set(directory, T: int, k: int) -> FlowSet:
    d = Path(directory)
    fwd = [read_flo(d / FLO_NAME.format(t, t + 1), t, t + 1) for t in range(k)]
    bwd = [read_flo(d / FLO_NAME.format(t, t - 1), t, t - 1) for t in range(k + 1, T + 1)]
    return FlowSet(k, T, fwd, bwd)


def stage_mask(h, w, k, cfg, key, out_dir) -> MaskMap:
    scfg = sampling_config(cfg, key)
    points = sample_points(h, w, scfg)
    mask = gaussian_mask(h, w, points, scfg.kernel_scale, k)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_pgm16(out_dir / "keyframe_mask.pgm", mask)
    write_tensor(out_dir / "keyframe_mask.vtf", mask.values.astype(np.float32))
    write_json(out_dir / "points.json", {"keyframe": k, "lambda": scfg.kernel_scale,
                                          "seed": scfg.seed, "points": points.tolist()})
    # continue from the stored (float32) values so chained commands see the same input
    return MaskMap(mask.values.astype(np.float32).astype(np.float64), k)


def stage_propagate(video, keyframe_mask: MaskMap, flows: FlowSet, out_dir) -> list:
    maps = compose_to_keyframe(flows, video.shape[:2])
    masks = propagate_mask(keyframe_mask, maps)
    out_dir = Path(out_dir)
    write_tensor(out_dir / "masks.vtf", np.stack([m.values for m in masks]).astype(np.float32))
    od = out_dir / "overlays"
    od.mkdir(parents=True, exist_ok=True)
    for t, (frame, m) in enumerate(zip(video.frames, masks)):
        Image.fromarray(overlay(frame, m)).save(od / f"overlay_{t:05d}.png")
    return masks


def load_masks(path) -> list:
    arr = read_tensor(path).astype(np.float64)
    return [MaskMap(np.clip(a, 0.0, 1.0), t) for t, a in enumerate(arr)]


def stage_tokenize(masks, cfg, key, out_dir) -> tuple:
    geom = geometry(cfg)
    tokens = binarize_tokens(masks, geom, cfg["mask.rho"])
    tube = tube_mask(tokens.bits.shape, cfg["mask.rho"], derive_seed(cfg["seed"], key, "tube"), geom)
    tokens.save(Path(out_dir) / "tokens.vtf")
    tube.save(Path(out_dir) / "tube_tokens.vtf")
    return tokens, tube


def load_tokens(path, rho, geom) -> TokenMask:
    return TokenMask(read_tensor(path).astype(bool), rho, geom)


def stage_leakage(video, tokens: TokenMask, tube: TokenMask, cfg, out_dir) -> dict:
    tau, w = cfg["leakage.tau"], cfg["leakage.window"]
    doc = {
        "flow_guided": leakage(video, tokens, tokens.geometry, tau, w).to_dict(),
        "tube": leakage(video, tube, tube.geometry, tau, w).to_dict(),
    }
    write_json(Path(out_dir) / "leakage.json", doc)
    return doc


def run_video(video: VideoSequence, key: str, cfg, out_dir) -> tuple:
    """Run every stage on one video; returns ``(results, timings)``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    timings = {}
    clock = time.perf_counter()

    def lap(name):
        nonlocal clock
        now = time.perf_counter()
        timings[name] = now - clock
        clock = now

    v, k = prepare(video, cfg)
    flows = stage_flow(v, k, cfg, key, out_dir)
    lap("flow")
    mask = stage_mask(v.shape[0], v.shape[1], k, cfg, key, out_dir)
    lap("mask")
    masks = stage_propagate(v, mask, flows, out_dir)
    lap("propagate")
    tokens, tube = stage_tokenize(masks, cfg, key, out_dir)
    lap("tokenize")
    leak = stage_leakage(v, tokens, tube, cfg, out_dir)
    lap("leakage")
    results = {
        "keyframe": k,
        "frames": v.num_frames,
        "shape": list(v.shape),
        "token_grid": list(tokens.bits.shape),
        "masked_tokens": tokens.count,
        "leakage_flow_guided": leak["flow_guided"]["leak_fraction"],
        "leakage_tube": leak["tube"]["leak_fraction"],
    }
    return results, timings


def run_pipeline(cfg: PipelineConfig) -> dict:
    manifest = Manifest.load(cfg["manifest"])
    out = Path(cfg["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    ann_path = cfg["annotations"] or str(Path(cfg["manifest"]).parent / "annotations.json")
    findings = None
    if os.path.exists(ann_path):
        report = validate_manifest(manifest, load_annotation_file(ann_path))
        findings = [{"kind": f.kind, "detail": f.detail} for f in report.findings]

    def job(entry):
        key = video_key(entry)
        video = load_video(manifest.resolve(entry), sensor=entry.sensor, object_id=entry.object_id,
                           region_id=entry.region_id, interaction=entry.interaction)
        return key, run_video(video, key, cfg, out / "videos" / key)

    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        done = list(pool.map(job, manifest.entries))
    results = {"manifest_findings": findings, "videos": {key: res for key, (res, _) in done}}
    timings = {key: t for key, (_, t) in done}
    return write_report(out, "pipeline", cfg, results, timings)
