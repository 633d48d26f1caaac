"""Keyframe selection and the Gaussian-mixture keyframe mask.

Mask polarity: 1 means "hidden from the encoder", 0 means visible.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .core import VideoSequence
from .errors import TooFewFrames
from .tensorfile import write_tensor


class KeyframeStrategy(str, enum.Enum):
    MIDDLE = "middle"
    MAX_CONTACT = "max_contact"


@dataclass(frozen=True)
class SamplingConfig:
    alpha: float = 0.25
    beta: int = 16
    lam: float | None = None  # defaults to beta / 2
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.beta < 2:
            raise ValueError(f"beta must be >= 2, got {self.beta}")
        if self.lam is not None and self.lam <= 0:
            raise ValueError(f"lambda must be > 0, got {self.lam}")

    @property
    def kernel_scale(self) -> float:
        return self.beta / 2.0 if self.lam is None else float(self.lam)


@dataclass(frozen=True, eq=False)
class MaskMap:
    values: np.ndarray
    frame_index: int = 0

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise ValueError(f"mask must be 2-D, got {values.shape}")
        if values.min(initial=0.0) < 0.0 or values.max(initial=0.0) > 1.0:
            raise ValueError("mask values must lie in [0, 1]")
        object.__setattr__(self, "values", values)

    @property
    def shape(self):
        return self.values.shape


def select_keyframe(video: VideoSequence, strategy=KeyframeStrategy.MIDDLE) -> int:
    strategy = KeyframeStrategy(strategy)
    if video.num_frames < 3:
        raise TooFewFrames(f"need at least 3 frames, got {video.num_frames}")
    if strategy is KeyframeStrategy.MIDDLE:
        return video.T // 2
    gray = video.gray()
    contact = np.abs(gray - gray[0]).mean(axis=(1, 2))
    return int(np.argmax(contact))  # first maximum wins ties


def num_sampling_points(h: int, w: int, alpha: float, beta: int) -> int:
    """``ceil(alpha * H * W / beta^2)``.

    A 1e-9 relative slack absorbs float noise such as ``0.1 * 2560 / 256``
    evaluating to ``1.0000000000000002``.
    """
    x = alpha * h * w / (beta * beta)
    return max(1, math.ceil(x - 1e-9 * max(1.0, x)))


def sample_points(h: int, w: int, cfg: SamplingConfig) -> np.ndarray:
    """Stratified jittered sampling points as an ``(N, 2)`` array of ``(x, y)``.

    The frame is cut into ``ceil(H/beta) x ceil(W/beta)`` cells; the cells are
    shuffled with ``cfg.seed`` and the first N each receive one point drawn
    uniformly among that cell's pixels. Points therefore sit on pixel
    centers, where the mask evaluates to exactly 1.
    """
    n = num_sampling_points(h, w, cfg.alpha, cfg.beta)
    rows, cols = -(-h // cfg.beta), -(-w // cfg.beta)
    rng = np.random.default_rng(cfg.seed)
    cells = rng.permutation(rows * cols)[:n]
    cy, cx = np.divmod(cells, cols)
    y0, x0 = cy * cfg.beta, cx * cfg.beta
    hy = np.minimum(y0 + cfg.beta, h) - y0
    hx = np.minimum(x0 + cfg.beta, w) - x0
    y = y0 + np.floor(rng.random(n) * hy).astype(np.int64)
    x = x0 + np.floor(rng.random(n) * hx).astype(np.int64)
    return np.stack([x, y], axis=1).astype(np.float64)


def mixture_value(points, lam: float, x, y):
    """Clamped Gaussian mixture evaluated at arbitrary positions."""
    points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    acc = np.zeros(np.broadcast(x, y).shape)
    inv = 1.0 / (2.0 * lam * lam)
    for px, py in points:
        acc += np.exp(-((x - px) ** 2 + (y - py) ** 2) * inv)
    return np.minimum(1.0, acc)


def gaussian_mask(h: int, w: int, points, lam: float, frame_index: int = 0) -> MaskMap:
    points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    if len(points) == 0:
        raise ValueError("gaussian_mask needs at least one point")
    # separable: exp(-(dx^2 + dy^2)/2l^2) = exp(-dx^2/2l^2) * exp(-dy^2/2l^2)
    inv = 1.0 / (2.0 * lam * lam)
    xs = np.arange(w, dtype=np.float64)
    ys = np.arange(h, dtype=np.float64)
    gx = np.exp(-((xs[None, :] - points[:, :1]) ** 2) * inv)  # (N, W)
    gy = np.exp(-((ys[None, :] - points[:, 1:]) ** 2) * inv)  # (N, H)
    total = gy.T @ gx
    return MaskMap(np.minimum(1.0, total), frame_index)


def keyframe_mask(video: VideoSequence, k: int, cfg: SamplingConfig) -> tuple:
    h, w = video.shape[:2]
    pts = sample_points(h, w, cfg)
    return gaussian_mask(h, w, pts, cfg.kernel_scale, k), pts


def write_pgm16(path, mask) -> None:
    """Binary 16-bit PGM, value ``round(65535 * m)``."""
    values = mask.values if isinstance(mask, MaskMap) else np.asarray(mask)
    h, w = values.shape
    q = np.round(np.clip(values, 0.0, 1.0) * 65535.0).astype(">u2")
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n65535\n".encode("ascii"))
        fh.write(q.tobytes())


def read_pgm16(path) -> np.ndarray:
    raw = open(path, "rb").read()
    fields, pos = [], 0
    while len(fields) < 4:
        while raw[pos:pos + 1].isspace():
            pos += 1
        end = pos
        while not raw[end:end + 1].isspace():
            end += 1
        fields.append(raw[pos:end])
        pos = end
    if fields[0] != b"P5" or int(fields[3]) != 65535:
        raise ValueError(f"{path} is not a 16-bit binary PGM")
    w, h = int(fields[1]), int(fields[2])
    # exactly one whitespace byte separates the header from the raster
    data = np.frombuffer(raw, dtype=">u2", count=w * h, offset=pos + 1).reshape(h, w)
    return data.astype(np.float64) / 65535.0


def save_mask(path, mask: MaskMap) -> None:
    write_tensor(path, mask.values.astype(np.float32))
