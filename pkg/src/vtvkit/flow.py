"""Dense optical flow, keyframe-oriented flow sets and flow composition.

Flow convention used everywhere in this package: a ``FlowField`` from frame
``a`` (index ``src_index``) to frame ``b`` (``dst_index``) holds, for every
pixel ``x`` of ``a``, the displacement ``d(x)`` such that
``a(x) ~= b(x + d(x))``. ``u`` is the horizontal (column) component, ``v``
the vertical (row) component.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage

from .core import VideoSequence, to_gray
from .errors import (
    BadMagic,
    DegenerateTarget,
    DimensionMismatch,
    KeyframeOutOfRange,
    MissingPath,
    TruncatedPayload,
    WriteFailure,
)
from .sampling import bilinear_sample, pixel_grid, resize_bilinear

FLO_MAGIC = 202021.25
FLO_NAME = "flow_{:05d}_{:05d}.flo"


@dataclass(frozen=True, eq=False)
class FlowField:
    u: np.ndarray
    v: np.ndarray
    src_index: int = 0
    dst_index: int = 1

    def __post_init__(self):
        u = np.asarray(self.u, dtype=np.float32)
        v = np.asarray(self.v, dtype=np.float32)
        if u.shape != v.shape or u.ndim != 2:
            raise DimensionMismatch(f"u {u.shape} and v {v.shape} must be equal 2-D grids")
        if not (np.isfinite(u).all() and np.isfinite(v).all()):
            raise ValueError("flow displacements must be finite")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)

    @property
    def shape(self):
        return self.u.shape

    def magnitude(self):
        return np.hypot(self.u.astype(np.float64), self.v.astype(np.float64))

    @classmethod
    def zeros(cls, h, w, src_index=0, dst_index=1):
        return cls(np.zeros((h, w)), np.zeros((h, w)), src_index, dst_index)


@dataclass(frozen=True, eq=False)
class FlowSet:
    """Forward flows ``t -> t+1`` for ``t < k`` and backward flows ``t -> t-1`` for ``t > k``."""

    keyframe_index: int
    T: int
    forward: tuple = field(default_factory=tuple)
    backward: tuple = field(default_factory=tuple)

    def __post_init__(self):
        k, T = self.keyframe_index, self.T
        object.__setattr__(self, "forward", tuple(self.forward))
        object.__setattr__(self, "backward", tuple(self.backward))
        if len(self.forward) != k or len(self.backward) != T - k:
            raise ValueError(f"flow set for T={T}, k={k} needs {k} forward and {T - k} backward flows")
        for t, f in enumerate(self.forward):
            if (f.src_index, f.dst_index) != (t, t + 1):
                raise ValueError(f"forward slot {t} holds flow {f.src_index}->{f.dst_index}")
        for t, f in zip(range(k + 1, T + 1), self.backward):
            if (f.src_index, f.dst_index) != (t, t - 1):
                raise ValueError(f"backward slot {t} holds flow {f.src_index}->{f.dst_index}")

    def __len__(self):
        return len(self.forward) + len(self.backward)

    def __iter__(self):
        yield from self.forward
        yield from self.backward

    def toward_keyframe(self, t: int) -> FlowField:
        """The member of the set that starts at frame ``t`` (``t != k``)."""
        k = self.keyframe_index
        if t < k:
            return self.forward[t]
        if t > k:
            return self.backward[t - k - 1]
        raise KeyError("the keyframe has no outgoing flow in the set")


@dataclass(frozen=True, eq=False)
class MappingField:
    """Sub-pixel keyframe coordinates ``(x', y')`` for every pixel of frame ``t``."""

    x: np.ndarray
    y: np.ndarray
    frame_index: int = 0

    @classmethod
    def identity(cls, h, w, frame_index=0):
        xx, yy = pixel_grid(h, w)
        return cls(xx, yy, frame_index)

    @classmethod
    def translation(cls, h, w, dx, dy, frame_index=0):
        xx, yy = pixel_grid(h, w)
        return cls(xx + dx, yy + dy, frame_index)

    @property
    def shape(self):
        return self.x.shape


@dataclass(frozen=True)
class FlowParams:
    pyramid_levels: int = 3
    iterations: int = 3
    window_radius: int = 2
    # small ridge term keeps the 2x2 systems solvable in flat regions
    regularization: float = 1e-6
    # updates are skipped where the smaller structure-tensor eigenvalue
    # (per window pixel) falls below this
    min_eigenvalue: float = 1e-5
    median_size: int = 5

    def __post_init__(self):
        if self.pyramid_levels < 1 or self.iterations < 1 or self.window_radius < 1:
            raise ValueError(f"invalid flow parameters {self}")


# ----------------------------------------------------------------------------
# spatial normalization


def normalize_spatial(video: VideoSequence, target_h: int, target_w: int) -> VideoSequence:
    if target_h < 16 or target_w < 16:
        raise DegenerateTarget(f"target {target_h}x{target_w} is below the 16 px minimum")
    if video.shape[:2] == (target_h, target_w):
        return video
    frames = np.stack([resize_bilinear(f, target_h, target_w) for f in video.frames])
    return video.replace_frames(np.clip(frames, 0.0, 1.0).astype(np.float32))


# ----------------------------------------------------------------------------
# pyramidal estimator


def _gray(frame) -> np.ndarray:
    frame = np.asarray(frame, dtype=np.float64)
    if frame.ndim == 2:
        return frame
    return to_gray(frame)


def _pyramid(img, levels):
    pyr = [img]
    for _ in range(levels - 1):
        if min(pyr[-1].shape) < 16:
            break
        pyr.append(ndimage.gaussian_filter(pyr[-1], 1.0, mode="nearest")[::2, ::2])
    return pyr


def _upsample_flow(u, v, shape):
    h, w = shape
    xx, yy = pixel_grid(h, w)
    return 2.0 * bilinear_sample(u, xx / 2.0, yy / 2.0), 2.0 * bilinear_sample(v, xx / 2.0, yy / 2.0)


def _refine(a, b, u, v, params: FlowParams):
    h, w = a.shape
    xx, yy = pixel_grid(h, w)
    size = 2 * params.window_radius + 1
    ay, ax = np.gradient(a)
    for _ in range(params.iterations):
        bw = bilinear_sample(b, xx + u, yy + v)
        by, bx = np.gradient(bw)
        gx = 0.5 * (ax + bx)
        gy = 0.5 * (ay + by)
        gt = bw - a
        sxx = ndimage.uniform_filter(gx * gx, size, mode="nearest")
        sxy = ndimage.uniform_filter(gx * gy, size, mode="nearest")
        syy = ndimage.uniform_filter(gy * gy, size, mode="nearest")
        sxt = ndimage.uniform_filter(gx * gt, size, mode="nearest")
        syt = ndimage.uniform_filter(gy * gt, size, mode="nearest")
        sxx = sxx + params.regularization
        syy = syy + params.regularization
        det = sxx * syy - sxy * sxy
        half_trace = 0.5 * (sxx + syy)
        lam_min = half_trace - np.sqrt(np.maximum(half_trace**2 - det, 0.0))
        ok = lam_min > params.min_eigenvalue
        du = np.where(ok, (-syy * sxt + sxy * syt) / det, 0.0)
        dv = np.where(ok, (sxy * sxt - sxx * syt) / det, 0.0)
        u = u + du
        v = v + dv
    if params.median_size > 1:
        u = ndimage.median_filter(u, params.median_size, mode="nearest")
        v = ndimage.median_filter(v, params.median_size, mode="nearest")
    return u, v


def estimate_flow(frame_a, frame_b, params: FlowParams | None = None, src_index=0, dst_index=1) -> FlowField:
    """Coarse-to-fine Lucas-Kanade flow from ``frame_a`` to ``frame_b``.

    Multi-channel frames are reduced to luma first. Each pyramid level runs
    ``params.iterations`` Gauss-Newton updates of a per-pixel least-squares
    fit over a ``(2r+1)^2`` window, warping ``frame_b`` by the running
    estimate before each update.
    """
    params = params or FlowParams()
    a, b = _gray(frame_a), _gray(frame_b)
    if a.shape != b.shape:
        raise DimensionMismatch(f"frame shapes differ: {a.shape} vs {b.shape}")
    pa, pb = _pyramid(a, params.pyramid_levels), _pyramid(b, params.pyramid_levels)
    u = np.zeros_like(pa[-1])
    v = np.zeros_like(pa[-1])
    for level in range(len(pa) - 1, -1, -1):
        if u.shape != pa[level].shape:
            u, v = _upsample_flow(u, v, pa[level].shape)
        u, v = _refine(pa[level], pb[level], u, v, params)
    return FlowField(u, v, src_index, dst_index)


# ----------------------------------------------------------------------------
# providers


class FlowProvider:
    """Source of pairwise flow fields for a video."""

    def flow(self, video: VideoSequence, src: int, dst: int) -> FlowField:
        raise NotImplementedError


class ClassicalPyramidal(FlowProvider):
    def __init__(self, params: FlowParams | None = None):
        self.params = params or FlowParams()

    def flow(self, video, src, dst):
        return estimate_flow(video.frames[src], video.frames[dst], self.params, src, dst)

    def __repr__(self):
        return f"ClassicalPyramidal({self.params})"


class Precomputed(FlowProvider):
    """Reads ``flow_SSSSS_DDDDD.flo`` files, e.g. exported from an external network."""

    def __init__(self, directory):
        self.directory = Path(directory)

    def flow(self, video, src, dst):
        f = read_flo(self.directory / FLO_NAME.format(src, dst), src, dst)
        if f.shape != video.shape[:2]:
            raise DimensionMismatch(f"precomputed flow {f.shape} vs video {video.shape[:2]}")
        return f

    def __repr__(self):
        return f"Precomputed({str(self.directory)!r})"


def bidirectional_flow_set(video: VideoSequence, k: int, provider: FlowProvider | None = None) -> FlowSet:
    T = video.T
    if not 0 <= k <= T:
        raise KeyframeOutOfRange(f"keyframe {k} outside 0..{T}")
    provider = provider or ClassicalPyramidal()
    forward = [provider.flow(video, t, t + 1) for t in range(0, k)]
    backward = [provider.flow(video, t, t - 1) for t in range(k + 1, T + 1)]
    return FlowSet(k, T, forward, backward)


def compose_to_keyframe(flows: FlowSet, shape=None) -> list:
    """Chain the flow set into per-frame maps ``C_{t->k}`` into keyframe coordinates.

    Maps are built outward from the keyframe; each step samples the inner
    map at the flow-displaced (edge-clamped) position.
    """
    k, T = flows.keyframe_index, flows.T
    if shape is None:
        shape = next(iter(flows)).shape
    h, w = shape
    xx, yy = pixel_grid(h, w)
    maps = [None] * (T + 1)
    maps[k] = MappingField.identity(h, w, k)
    order = [(t, t + 1) for t in range(k - 1, -1, -1)] + [(t, t - 1) for t in range(k + 1, T + 1)]
    for t, inner in order:
        f = flows.toward_keyframe(t)
        px = np.clip(xx + f.u, 0.0, w - 1)
        py = np.clip(yy + f.v, 0.0, h - 1)
        m = maps[inner]
        maps[t] = MappingField(bilinear_sample(m.x, px, py), bilinear_sample(m.y, px, py), t)
    return maps


# ----------------------------------------------------------------------------
# Middlebury .flo


def write_flo(flow: FlowField, path) -> None:
    h, w = flow.shape
    data = np.empty((h, w, 2), dtype="<f4")
    data[..., 0] = flow.u
    data[..., 1] = flow.v
    try:
        with open(path, "wb") as fh:
            fh.write(struct.pack("<fii", FLO_MAGIC, w, h))
            fh.write(data.tobytes())
    except OSError as exc:
        raise WriteFailure(f"cannot write {path}: {exc}") from exc


def read_flo(path, src_index=0, dst_index=1) -> FlowField:
    path = Path(path)
    if not path.exists():
        raise MissingPath(str(path))
    raw = path.read_bytes()
    if len(raw) < 12:
        raise TruncatedPayload(f"{path}: header truncated")
    magic, w, h = struct.unpack_from("<fii", raw, 0)
    if magic != FLO_MAGIC:
        raise BadMagic(f"{path}: magic {magic} != {FLO_MAGIC}")
    if w <= 0 or h <= 0:
        raise BadMagic(f"{path}: invalid size {w}x{h}")
    need = 2 * w * h
    have = (len(raw) - 12) // 4
    if have < need:
        raise TruncatedPayload(f"{path}: {have} floats present, {need} expected")
    data = np.frombuffer(raw, dtype="<f4", count=need, offset=12).reshape(h, w, 2)
    return FlowField(data[..., 0], data[..., 1], src_index, dst_index)
