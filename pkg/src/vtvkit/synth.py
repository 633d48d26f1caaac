"""Synthetic press / rotate / slide sequences with analytic ground-truth flow.

The background is a seeded sum of eight random-phase sinusoids evaluated in
closed form at arbitrary sub-pixel positions, so moved frames are rendered
without resampling error and the returned flows are exact.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .core import InteractionKind, VideoSequence
from .flow import FlowField
from .sampling import pixel_grid

N_WAVES = 8
WAVELENGTH_RANGE = (14.0, 40.0)
TEXTURE_MEAN = 0.5
TEXTURE_SPAN = 0.42  # max |deviation| from the mean
BLOB_GAIN = 0.8
BLOB_LEVEL = 0.95


class Interaction(str, enum.Enum):
    PRESS = "press"
    ROTATE = "rotate"
    SLIDE = "slide"


@dataclass(frozen=True)
class InteractionSpec:
    """``amplitude`` is px/frame (slide, press radius growth) or deg/frame (rotate)."""

    kind: Interaction
    amplitude: float
    frames: int = 9
    texture_seed: int = 0
    contact_profile: tuple = (0.5, 0.0, 0.5)
    channels: int = 1

    def __post_init__(self):
        object.__setattr__(self, "kind", Interaction(self.kind))
        object.__setattr__(self, "contact_profile", tuple(float(p) for p in self.contact_profile))
        if self.frames < 3:
            raise ValueError("frames must be >= 3")
        if self.amplitude < 0:
            raise ValueError("amplitude must be >= 0")
        if len(self.contact_profile) != 3 or min(self.contact_profile) < 0:
            raise ValueError("contact_profile is (ramp_up, plateau, ramp_down) fractions")
        if abs(sum(self.contact_profile) - 1.0) > 1e-9:
            raise ValueError("contact_profile fractions must sum to 1")


class Texture:
    """Band-limited random texture, values within TEXTURE_MEAN +/- TEXTURE_SPAN."""

    def __init__(self, seed: int):
        rng = np.random.default_rng(seed)
        wl = rng.uniform(*WAVELENGTH_RANGE, size=N_WAVES)
        theta = rng.uniform(0.0, np.pi, size=N_WAVES)
        self.kx = 2 * np.pi * np.cos(theta) / wl
        self.ky = 2 * np.pi * np.sin(theta) / wl
        self.phase = rng.uniform(0.0, 2 * np.pi, size=N_WAVES)

    def __call__(self, x, y):
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        acc = np.zeros(np.broadcast(x, y).shape)
        for kx, ky, ph in zip(self.kx, self.ky, self.phase):
            acc += np.cos(kx * x + ky * y + ph)
        return TEXTURE_MEAN + TEXTURE_SPAN * acc / N_WAVES


def contact_level(t: int, frames: int, profile) -> float:
    up, plateau, down = profile
    s = t / (frames - 1)
    if s <= up:
        level = s / up if up > 0 else 1.0
    elif s <= up + plateau:
        level = 1.0
    else:
        level = (1.0 - s) / down if down > 0 else 0.0
    return min(1.0, max(0.0, level))


def press_radii(spec: InteractionSpec) -> np.ndarray:
    r_max = spec.amplitude * spec.contact_profile[0] * (spec.frames - 1)
    return np.array([r_max * contact_level(t, spec.frames, spec.contact_profile) for t in range(spec.frames)])


def _bump(s):
    s = np.asarray(s)
    out = np.zeros_like(s)
    inside = s < 1.0
    out[inside] = (1.0 - s[inside] ** 2) ** 2
    return out


def rotation_flow(h: int, w: int, degrees: float):
    """Exact displacement of a rigid rotation by ``degrees`` about the frame center."""
    xx, yy = pixel_grid(h, w)
    cx, cy = (w - 1) / 2.0, (h - 1) / 2.0
    a = math.radians(degrees)
    c, s = math.cos(a), math.sin(a)
    dx, dy = xx - cx, yy - cy
    return c * dx - s * dy - dx, s * dx + c * dy - dy


def synth_sequence(spec: InteractionSpec, h: int, w: int):
    """Render ``spec`` at ``h x w``; returns ``(video, flows)`` with flows ``t -> t+1``."""
    tex = Texture(spec.texture_seed)
    xx, yy = pixel_grid(h, w)
    cx, cy = (w - 1) / 2.0, (h - 1) / 2.0
    n = spec.frames
    frames = []
    flows = []

    if spec.kind is Interaction.SLIDE:
        d = float(spec.amplitude)
        for t in range(n):
            frames.append(tex(xx - t * d, yy))
        flows = [FlowField(np.full((h, w), d), np.zeros((h, w)), t, t + 1) for t in range(n - 1)]
        interaction = InteractionKind.SLIDE

    elif spec.kind is Interaction.ROTATE:
        for t in range(n):
            a = math.radians(-t * spec.amplitude)
            c, s = math.cos(a), math.sin(a)
            dx, dy = xx - cx, yy - cy
            frames.append(tex(c * dx - s * dy + cx, s * dx + c * dy + cy))
        u, v = rotation_flow(h, w, spec.amplitude)
        flows = [FlowField(u, v, t, t + 1) for t in range(n - 1)]
        interaction = InteractionKind.ROTATE

    else:
        radii = press_radii(spec)
        rho = np.hypot(xx - cx, yy - cy)
        base = tex(xx, yy)
        for r in radii:
            b = BLOB_GAIN * _bump(rho / r) if r > 0 else np.zeros_like(rho)
            frames.append(base * (1.0 - b) + BLOB_LEVEL * b)
        for t in range(n - 1):
            r0, r1 = radii[t], radii[t + 1]
            u = np.zeros((h, w))
            v = np.zeros((h, w))
            if r0 > 0 and r1 != r0:
                # the blob profile scales radially; background does not move
                inside = rho < max(r0, r1)
                scale = r1 / r0 - 1.0
                u[inside] = (xx - cx)[inside] * scale
                v[inside] = (yy - cy)[inside] * scale
            flows.append(FlowField(u, v, t, t + 1))
        interaction = InteractionKind.PRESS

    arr = np.stack(frames).astype(np.float32)[..., None]
    if spec.channels > 1:
        arr = np.repeat(arr, spec.channels, axis=-1)
    video = VideoSequence(arr, interaction=interaction, object_id=f"synth-{spec.kind.value}-{spec.texture_seed}")
    return video, flows
