"""Bilinear sampling with edge clamping, used by warping and resizing."""
from __future__ import annotations

import numpy as np


def bilinear_sample(image, x, y):
    """Sample ``image`` at sub-pixel positions ``(x, y)``.

    ``image`` is ``(H, W)`` or ``(H, W, C)``; ``x`` indexes columns and ``y``
    rows. Coordinates outside the image are clamped to the nearest edge
    pixel. Integer coordinates return the stored value exactly.
    """
    image = np.asarray(image)
    h, w = image.shape[:2]
    x = np.clip(np.asarray(x, dtype=np.float64), 0.0, w - 1)
    y = np.clip(np.asarray(y, dtype=np.float64), 0.0, h - 1)
    x0 = np.floor(x).astype(np.intp)
    y0 = np.floor(y).astype(np.intp)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    wx = x - x0
    wy = y - y0
    if image.ndim == 3:
        wx = wx[..., None]
        wy = wy[..., None]
    top = image[y0, x0] * (1.0 - wx) + image[y0, x1] * wx
    bottom = image[y1, x0] * (1.0 - wx) + image[y1, x1] * wx
    return top * (1.0 - wy) + bottom * wy


def resize_bilinear(image, out_h: int, out_w: int):
    """Endpoint-aligned bilinear resize of an ``(H, W[, C])`` array."""
    image = np.asarray(image, dtype=np.float64)
    h, w = image.shape[:2]
    if (h, w) == (out_h, out_w):
        return image.copy()
    ys = np.linspace(0.0, h - 1, out_h) if out_h > 1 else np.zeros(1)
    xs = np.linspace(0.0, w - 1, out_w) if out_w > 1 else np.zeros(1)
    yy, xx = np.meshgrid(ys, xs, indexing="ij")
    return bilinear_sample(image, xx, yy)


def pixel_grid(h: int, w: int):
    """Return ``(x, y)`` coordinate arrays of shape ``(h, w)``."""
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    return xx, yy
