"""Warp the keyframe mask through time and turn it into tubelet token masks."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .core import VideoSequence
from .errors import DimensionMismatch, GeometryMismatch
from .keyframe import MaskMap
from .sampling import bilinear_sample
from .tensorfile import write_tensor


@dataclass(frozen=True)
class TubeletGeometry:
    t_patch: int = 2
    p: int = 16

    def __post_init__(self):
        if self.t_patch < 1 or self.p < 1:
            raise ValueError(f"invalid tubelet geometry {self}")

    def grid(self, num_frames: int, h: int, w: int) -> tuple:
        """Token grid ``(temporal, rows, cols)``; trailing frames that do not fill a tubelet are dropped."""
        if h % self.p or w % self.p:
            raise GeometryMismatch(f"{h}x{w} frames are not divisible by patch size {self.p}")
        if num_frames < self.t_patch:
            raise GeometryMismatch(f"{num_frames} frames cannot fill a {self.t_patch}-frame tubelet")
        return num_frames // self.t_patch, h // self.p, w // self.p

    def tubelets(self, stack) -> np.ndarray:
        """Split a ``(F, H, W[, C])`` stack into ``(Tg, R, Cg, t_patch, p, p[, C])`` blocks."""
        stack = np.asarray(stack)
        tg, r, c = self.grid(stack.shape[0], stack.shape[1], stack.shape[2])
        stack = stack[: tg * self.t_patch]
        tail = stack.shape[3:]
        blocks = stack.reshape((tg, self.t_patch, r, self.p, c, self.p) + tail)
        order = (0, 2, 4, 1, 3, 5) + tuple(range(6, 6 + len(tail)))
        return blocks.transpose(order)


@dataclass(frozen=True, eq=False)
class TokenMask:
    bits: np.ndarray  # bool (temporal, row, col); True = masked
    rho: float
    geometry: TubeletGeometry = TubeletGeometry()

    @property
    def ratio(self) -> float:
        return float(self.bits.mean())

    @property
    def count(self) -> int:
        return int(self.bits.sum())

    @property
    def flat(self) -> np.ndarray:
        return self.bits.reshape(-1)

    def sidecar(self) -> dict:
        return {
            "schema_version": 1,
            "grid": list(self.bits.shape),
            "t_patch": self.geometry.t_patch,
            "patch": self.geometry.p,
            "rho": self.rho,
            "masked": self.count,
            "ratio": self.ratio,
        }

    def save(self, path) -> None:
        """Write ``path`` (u8 TensorFile) and ``path + '.json'``."""
        write_tensor(path, self.bits.astype(np.uint8))
        with open(str(path) + ".json", "w") as fh:
            json.dump(self.sidecar(), fh, indent=2, sort_keys=True)
            fh.write("\n")


@dataclass(frozen=True)
class LeakageReport:
    leak_fraction: float
    per_frame: tuple
    tau: float
    window: int
    masked: int = 0
    recoverable: int = 0

    def to_dict(self) -> dict:
        return {
            "leak_fraction": self.leak_fraction,
            "per_frame": list(self.per_frame),
            "tau": self.tau,
            "window": self.window,
            "masked": self.masked,
            "recoverable": self.recoverable,
        }


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def propagate_mask(keyframe_mask: MaskMap, mappings) -> list:
    """Backward-warp the keyframe mask: ``M_t(x) = M'_k(C_{t->k}(x))``."""
    src = keyframe_mask.values
    out = []
    for t, m in enumerate(mappings):
        if m.shape != src.shape:
            raise DimensionMismatch(f"mapping {t} is {m.shape}, mask is {src.shape}")
        values = np.clip(bilinear_sample(src, m.x, m.y), 0.0, 1.0)
        out.append(MaskMap(values, t))
    return out


def tubelet_scores(masks, geom: TubeletGeometry) -> np.ndarray:
    stack = np.stack([m.values if isinstance(m, MaskMap) else np.asarray(m) for m in masks])
    return geom.tubelets(stack).mean(axis=(3, 4, 5))


def binarize_tokens(masks, geom: TubeletGeometry, rho: float) -> TokenMask:
    """Mask the ``round(rho * K)`` tubelets with the highest mean mask value.

    Ties go to the earlier tubelet in ``(temporal, row, col)`` order.
    """
    if not 0.0 < rho < 1.0:
        raise ValueError(f"rho must lie in (0, 1), got {rho}")
    scores = tubelet_scores(masks, geom)
    flat = scores.reshape(-1)
    n = round_half_up(rho * flat.size)
    order = np.argsort(-flat, kind="stable")
    bits = np.zeros(flat.size, dtype=bool)
    bits[order[:n]] = True
    return TokenMask(bits.reshape(scores.shape), rho, geom)


def tube_mask(grid: tuple, rho: float, seed: int, geom: TubeletGeometry = TubeletGeometry()) -> TokenMask:
    """One random spatial mask repeated at every temporal index."""
    if not 0.0 < rho < 1.0:
        raise ValueError(f"rho must lie in (0, 1), got {rho}")
    tg, r, c = grid
    n = round_half_up(rho * r * c)
    rng = np.random.default_rng(seed)
    spatial = np.zeros(r * c, dtype=bool)
    spatial[rng.permutation(r * c)[:n]] = True
    bits = np.broadcast_to(spatial.reshape(r, c), (tg, r, c)).copy()
    return TokenMask(bits, rho, geom)


def leakage(video: VideoSequence, token_mask: TokenMask, geom: TubeletGeometry | None = None,
            tau: float = 0.05, w: int = 1) -> LeakageReport:
    """Share of masked tubelets that a visible co-located tubelet within
    ``w`` temporal steps matches to within mean absolute difference ``tau``."""
    if tau <= 0 or w < 1:
        raise ValueError("leakage needs tau > 0 and w >= 1")
    geom = geom or token_mask.geometry
    blocks = geom.tubelets(video.frames.astype(np.float64))
    tg = blocks.shape[0]
    blocks = blocks.reshape(blocks.shape[:3] + (-1,))
    bits = token_mask.bits
    if bits.shape != blocks.shape[:3]:
        raise GeometryMismatch(f"token mask {bits.shape} vs video grid {blocks.shape[:3]}")
    recoverable = np.zeros_like(bits)
    for d in range(1, w + 1):
        if d >= tg:
            break
        diff = np.abs(blocks[d:] - blocks[:-d]).mean(axis=-1)
        close = diff < tau
        # earlier tubelet masked, later one visible (and vice versa)
        recoverable[:-d] |= bits[:-d] & ~bits[d:] & close
        recoverable[d:] |= bits[d:] & ~bits[:-d] & close
    masked = int(bits.sum())
    rec = int(recoverable.sum())
    per_frame = []
    for t in range(tg):
        m = int(bits[t].sum())
        per_frame.append(float(recoverable[t].sum()) / m if m else 0.0)
    return LeakageReport(rec / masked if masked else 0.0, tuple(per_frame), tau, w, masked, rec)


def overlay(frame, mask, alpha: float = 0.6) -> np.ndarray:
    """Blend a red mask over a frame; returns ``(H, W, 3)`` uint8."""
    frame = np.asarray(frame, dtype=np.float64)
    if frame.ndim == 2:
        frame = frame[..., None]
    rgb = np.repeat(frame, 3, axis=-1) if frame.shape[-1] == 1 else frame[..., :3]
    m = np.asarray(mask.values if isinstance(mask, MaskMap) else mask, dtype=np.float64)[..., None]
    red = np.array([1.0, 0.0, 0.0])
    out = rgb * (1.0 - alpha * m) + red * (alpha * m)
    return np.round(np.clip(out, 0.0, 1.0) * 255.0).astype(np.uint8)
