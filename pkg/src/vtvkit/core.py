"""Domain types and video I/O shared by the rest of the package."""
from __future__ import annotations

import enum
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import (
    DecodeFailure,
    InconsistentDimensions,
    MissingPath,
    TooFewFrames,
    WriteFailure,
)
from .tensorfile import read_tensor, write_tensor

FRAME_PATTERN = "frame_{:05d}.png"
MANIFEST_SCHEMA_VERSION = 1


class SensorKind(str, enum.Enum):
    GELSIGHT_MINI = "GelSightMini"
    DIGIT = "DIGIT"
    TAC3D = "Tac3D"


class InteractionKind(str, enum.Enum):
    PRESS = "press"
    ROTATE = "rotate"
    SLIDE = "slide"
    MIXED = "mixed"


class _Level(str, enum.Enum):
    @property
    def ordinal(self) -> int:
        return list(type(self)).index(self)

    @property
    def label(self) -> str:
        return self.value.replace("_", " ")


# Members are declared in ordinal order (0 < 1 < 2).
class Hardness(_Level):
    HIGHLY_DEFORMABLE = "highly_deformable"
    MODERATELY_DEFORMABLE = "moderately_deformable"
    EXTREMELY_HARD = "extremely_hard"


class Protrusion(_Level):
    ABSENT = "absent"
    MODERATE = "moderate"
    STRONG = "strong"


class Elasticity(_Level):
    NONE = "none"
    MODERATE = "moderate"
    STRONG = "strong"


class Friction(_Level):
    SLIGHT = "slight"
    MODERATE = "moderate"
    STRONG = "strong"


ATTRIBUTES = {
    "hardness": Hardness,
    "protrusion": Protrusion,
    "elasticity": Elasticity,
    "friction": Friction,
}


@dataclass(frozen=True)
class TactileAnnotation:
    object_id: str
    hardness: Hardness
    protrusion: Protrusion
    elasticity: Elasticity
    friction: Friction

    def __post_init__(self):
        for name, kind in ATTRIBUTES.items():
            # accepts raw strings, e.g. straight from JSON
            object.__setattr__(self, name, kind(getattr(self, name)))

    def level(self, attribute: str) -> _Level:
        return getattr(self, attribute)

    def ordinals(self) -> tuple:
        return tuple(self.level(a).ordinal for a in ATTRIBUTES)

    def to_dict(self) -> dict:
        d = {"object_id": self.object_id}
        d.update({a: self.level(a).value for a in ATTRIBUTES})
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TactileAnnotation":
        return cls(d["object_id"], *(d[a] for a in ATTRIBUTES))


@dataclass(frozen=True, eq=False)
class VideoSequence:
    """Frames ``I_0 .. I_T`` stored as a read-only ``(T+1, H, W, C)`` float32 array."""

    frames: np.ndarray
    sensor: SensorKind = SensorKind.GELSIGHT_MINI
    object_id: str = ""
    region_id: int = 0
    interaction: InteractionKind = InteractionKind.PRESS
    fps: float = 30.0

    def __post_init__(self):
        frames = self.frames
        if isinstance(frames, (list, tuple)):
            if not frames:
                raise TooFewFrames("a video needs at least 3 frames, got 0")
            shapes = [np.shape(f) for f in frames]
            if any(s != shapes[0] for s in shapes):
                bad = next(i for i, s in enumerate(shapes) if s != shapes[0])
                raise InconsistentDimensions(f"frame {bad} has shape {shapes[bad]}, frame 0 has {shapes[0]}")
            frames = np.stack([np.asarray(f) for f in frames])
        frames = np.asarray(frames)
        if frames.ndim == 3:
            frames = frames[..., None]
        if frames.ndim != 4:
            raise InconsistentDimensions(f"expected (T+1, H, W, C) frames, got shape {frames.shape}")
        if frames.shape[0] < 3:
            raise TooFewFrames(f"a video needs at least 3 frames, got {frames.shape[0]}")
        if frames.dtype == np.uint8:
            frames = frames.astype(np.float32) / np.float32(255.0)
        else:
            frames = np.clip(frames.astype(np.float32), 0.0, 1.0)
        frames.setflags(write=False)
        object.__setattr__(self, "frames", frames)
        object.__setattr__(self, "sensor", SensorKind(self.sensor))
        object.__setattr__(self, "interaction", InteractionKind(self.interaction))

    @property
    def num_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def T(self) -> int:
        return self.frames.shape[0] - 1

    @property
    def shape(self) -> tuple:
        return self.frames.shape[1:]

    def gray(self) -> np.ndarray:
        """Luma frames, ``(T+1, H, W)`` float64."""
        return to_gray(self.frames)

    def replace_frames(self, frames) -> "VideoSequence":
        return VideoSequence(frames, self.sensor, self.object_id, self.region_id, self.interaction, self.fps)


def to_gray(frames) -> np.ndarray:
    frames = np.asarray(frames, dtype=np.float64)
    if frames.shape[-1] == 1:
        return frames[..., 0]
    if frames.shape[-1] >= 3:
        return frames[..., 0] * 0.299 + frames[..., 1] * 0.587 + frames[..., 2] * 0.114
    raise ValueError(f"cannot convert {frames.shape[-1]}-channel frames to luma")


# ----------------------------------------------------------------------------
# video I/O


def _detect_layout(path: Path) -> str:
    return "frame-directory" if path.is_dir() else "tensor-file"


def load_video(path, layout: str | None = None, **meta) -> VideoSequence:
    path = Path(path)
    if not path.exists():
        raise MissingPath(str(path))
    layout = layout or _detect_layout(path)
    if layout == "tensor-file":
        arr = read_tensor(path)
        if arr.ndim not in (3, 4):
            raise DecodeFailure(f"video tensor must have 3 or 4 dims, got {arr.shape}")
        return VideoSequence(arr, **meta)
    if layout != "frame-directory":
        raise ValueError(f"unknown layout {layout!r}")

    files = sorted(path.glob("frame_*.png"))
    frames = []
    for f in files:
        try:
            with Image.open(f) as im:
                frames.append(_decode_image(im))
        except (OSError, ValueError) as exc:
            raise DecodeFailure(f"cannot decode {f}: {exc}") from exc
    if frames and any(fr.shape != frames[0].shape for fr in frames):
        bad = next(f for f, fr in zip(files, frames) if fr.shape != frames[0].shape)
        raise InconsistentDimensions(f"{bad.name} does not match {files[0].name} ({frames[0].shape})")
    return VideoSequence(frames, **meta)


def _decode_image(im: Image.Image) -> np.ndarray:
    if im.mode in ("I;16", "I;16B", "I"):
        arr = np.asarray(im, dtype=np.float64) / 65535.0
        return arr[..., None].astype(np.float32)
    if im.mode not in ("L", "RGB"):
        im = im.convert("RGB")
    arr = np.asarray(im, dtype=np.uint8).astype(np.float32) / np.float32(255.0)
    return arr if arr.ndim == 3 else arr[..., None]


def save_video(video: VideoSequence, path, layout: str = "tensor-file") -> None:
    path = Path(path)
    try:
        if layout == "tensor-file":
            write_tensor(path, video.frames)
            return
        if layout != "frame-directory":
            raise ValueError(f"unknown layout {layout!r}")
        path.mkdir(parents=True, exist_ok=True)
        for t, frame in enumerate(video.frames):
            q = np.round(frame * 255.0).astype(np.uint8)
            mode = "L" if q.shape[-1] == 1 else "RGB"
            img = Image.fromarray(q[..., 0] if mode == "L" else q[..., :3], mode=mode)
            img.save(path / FRAME_PATTERN.format(t))
    except OSError as exc:
        raise WriteFailure(f"cannot write video to {path}: {exc}") from exc


# ----------------------------------------------------------------------------
# manifest


@dataclass(frozen=True)
class ManifestEntry:
    video: str
    object_id: str
    region_id: int
    sensor: SensorKind
    interaction: InteractionKind
    annotation: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "sensor", SensorKind(self.sensor))
        object.__setattr__(self, "interaction", InteractionKind(self.interaction))
        object.__setattr__(self, "region_id", int(self.region_id))

    @property
    def annotation_ref(self) -> str:
        return self.annotation or self.object_id

    @property
    def key(self) -> tuple:
        return (self.object_id, self.region_id, self.sensor.value, self.interaction.value)

    def to_dict(self) -> dict:
        return {
            "video": self.video,
            "object_id": self.object_id,
            "region_id": self.region_id,
            "sensor": self.sensor.value,
            "interaction": self.interaction.value,
            "annotation": self.annotation,
        }


@dataclass(frozen=True)
class Manifest:
    entries: tuple
    base_dir: str = "."

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))

    def resolve(self, entry: ManifestEntry) -> Path:
        p = Path(entry.video)
        return p if p.is_absolute() else Path(self.base_dir) / p

    def to_json(self) -> str:
        doc = {
            "schema_version": MANIFEST_SCHEMA_VERSION,
            "entries": [e.to_dict() for e in self.entries],
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    def save(self, path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path) -> "Manifest":
        path = Path(path)
        if not path.exists():
            raise MissingPath(str(path))
        doc = json.loads(path.read_text())
        version = doc.get("schema_version")
        if version != MANIFEST_SCHEMA_VERSION:
            raise DecodeFailure(f"unsupported manifest schema_version {version!r}")
        entries = [ManifestEntry(**e) for e in doc["entries"]]
        return cls(entries, base_dir=str(path.parent))


@dataclass(frozen=True)
class Finding:
    kind: str  # MissingAnnotation | Duplicate | UnresolvablePath
    detail: str


@dataclass(frozen=True)
class ValidationReport:
    findings: tuple = field(default_factory=tuple)

    @property
    def ok(self) -> bool:
        return not self.findings

    def of_kind(self, kind: str) -> list:
        return [f for f in self.findings if f.kind == kind]


def validate_manifest(manifest: Manifest, annotations) -> ValidationReport:
    annotated = {a.object_id for a in annotations}
    findings = []
    seen = set()
    for i, e in enumerate(manifest.entries):
        if e.annotation_ref not in annotated:
            findings.append(Finding("MissingAnnotation", f"entry {i}: no annotation for {e.annotation_ref!r}"))
        if e.key in seen:
            findings.append(Finding("Duplicate", f"entry {i}: duplicate {e.key}"))
        seen.add(e.key)
        if not os.path.exists(manifest.resolve(e)):
            findings.append(Finding("UnresolvablePath", f"entry {i}: {e.video}"))
    return ValidationReport(tuple(findings))


def load_annotation_file(path) -> list:
    path = Path(path)
    if not path.exists():
        raise MissingPath(str(path))
    doc = json.loads(path.read_text())
    items = doc["annotations"] if isinstance(doc, dict) else doc
    return [TactileAnnotation.from_dict(d) for d in items]


def save_annotation_file(path, annotations) -> None:
    doc = {"schema_version": 1, "annotations": [a.to_dict() for a in annotations]}
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
