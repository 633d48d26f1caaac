"""Flat ``key = value`` pipeline configuration.

Example file::

    schema_version = 1
    manifest = corpus/manifest.json
    output_dir = run
    seed = 7
    sampling.alpha = 0.25

Blank lines and ``#`` comments are ignored. Unknown keys and out-of-range
values raise ``ConfigError`` naming the key. Command-line ``--set key=value``
overrides are applied on top of the file.
"""
from __future__ import annotations

from pathlib import Path

from .errors import ConfigError

SCHEMA_VERSION = 1


def _in_open_unit(v):
    return 0.0 < v < 1.0


def _positive(v):
    return v > 0


def _at_least(n):
    return lambda v: v >= n


def _choice(*options):
    return lambda v: v in options


def _any(v):
    return True


# key -> (type, default, check, description)
SCHEMA = {
    "schema_version": (int, SCHEMA_VERSION, _choice(SCHEMA_VERSION), "config format version"),
    "manifest": (str, "", _any, "input manifest JSON"),
    "annotations": (str, "", _any, "annotation JSON (default: annotations.json next to the manifest)"),
    "output_dir": (str, "vtv_out", _any, "directory for all artifacts"),
    "seed": (int, 0, _at_least(0), "top-level seed; per-video seeds are derived from it"),
    "flow.provider": (str, "classical", _choice("classical", "precomputed"), "flow source"),
    "flow.directory": (str, "", _any, "root of precomputed .flo files (one subdirectory per video)"),
    "flow.pyramid_levels": (int, 3, _at_least(1), "pyramid levels"),
    "flow.iterations": (int, 3, _at_least(1), "iterations per level"),
    "flow.window_radius": (int, 2, _at_least(1), "least-squares window radius"),
    "normalize.height": (int, 224, _at_least(16), "flow/mask working height"),
    "normalize.width": (int, 224, _at_least(16), "flow/mask working width"),
    "sampling.alpha": (float, 0.25, _in_open_unit, "sampling density"),
    "sampling.beta": (int, 16, _at_least(2), "sampling grid size (px)"),
    "sampling.lambda": (float, 0.0, lambda v: v >= 0, "kernel scale (px); 0 means beta/2"),
    "sampling.epoch": (int, 0, _at_least(0), "epoch index mixed into per-video seeds"),
    "keyframe.strategy": (str, "middle", _choice("middle", "max_contact"), "keyframe rule"),
    "tubelet.t_patch": (int, 2, _at_least(1), "frames per tubelet"),
    "tubelet.patch": (int, 16, _at_least(1), "spatial patch side (px)"),
    "mask.rho": (float, 0.75, _in_open_unit, "target token mask ratio"),
    "leakage.tau": (float, 0.05, _positive, "photometric threshold"),
    "leakage.window": (int, 1, _at_least(1), "temporal window"),
    "spline.height": (int, 0, lambda v: v >= 0, "force-field target height; 0 means 4x"),
    "spline.width": (int, 0, lambda v: v >= 0, "force-field target width; 0 means 4x"),
    "qa.count": (int, 10_000, _at_least(1), "pairs per generated set"),
    "qa.mix": (str, "", _any, "task mix, e.g. fas=0.5,sfd=0.5 (empty: default)"),
    "qa.held_out_objects": (int, 10, _at_least(0), "objects reserved for the test split"),
    "qa.test_count": (int, 600, _at_least(0), "test pairs"),
    "qa.tolerance": (float, 0.01, lambda v: 0 <= v <= 1, "distribution tolerance"),
}


def _convert(key, raw):
    kind = SCHEMA[key][0]
    try:
        if kind is int:
            return int(str(raw).strip())
        if kind is float:
            return float(str(raw).strip())
        return str(raw).strip()
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r} as {kind.__name__}", key) from None


class PipelineConfig(dict):
    """Validated configuration values keyed by their dotted names."""

    def __init__(self, values=None):
        super().__init__({k: spec[1] for k, spec in SCHEMA.items()})
        for key, raw in (values or {}).items():
            self.set(key, raw)

    def set(self, key, raw):
        if key not in SCHEMA:
            raise ConfigError(f"unknown config key {key!r}", key)
        value = _convert(key, raw)
        if not SCHEMA[key][2](value):
            raise ConfigError(f"{key}={value!r} is out of range ({SCHEMA[key][3]})", key)
        self[key] = value

    def to_text(self) -> str:
        return "".join(f"{k} = {self[k]}\n" for k in SCHEMA)


def parse_config_text(text: str, source: str = "<config>") -> dict:
    values = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{source}:{n}: expected 'key = value'")
        values[key.strip()] = value.strip()
    return values


def load_config(path=None, overrides=None) -> PipelineConfig:
    values = {}
    if path:
        p = Path(path)
        if not p.exists():
            raise ConfigError(f"config file {path} not found")
        values.update(parse_config_text(p.read_text(), str(path)))
    cfg = PipelineConfig()
    for key, raw in values.items():
        cfg.set(key, raw)
    for key, raw in (overrides or {}).items():
        cfg.set(key, raw)
    return cfg
