"""Numeric building blocks of the stage-1 encoder interface and its losses.

Everything here is plain numpy in float64 and comes with an analytic
gradient so that it can be checked against central differences.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import erf

from .core import VideoSequence
from .errors import EmptyMask, LabelOutOfRange, NegativeInput, OddDimension, ShapeMismatch
from .propagate import TokenMask, TubeletGeometry
from .tensorfile import read_tensor, write_tensor

_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True, eq=False)
class TokenTensor:
    values: np.ndarray  # (num_tokens, dim)
    grid: tuple = ()

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise ShapeMismatch(f"tokens must be (num_tokens, dim), got {values.shape}")
        if self.grid and int(np.prod(self.grid)) != values.shape[0]:
            raise ShapeMismatch(f"grid {self.grid} does not match {values.shape[0]} tokens")
        object.__setattr__(self, "values", values)

    @property
    def shape(self):
        return self.values.shape


@dataclass(frozen=True, eq=False)
class Linear:
    weight: np.ndarray  # (d_in, d_out)
    bias: np.ndarray  # (d_out,)

    def __post_init__(self):
        w = np.asarray(self.weight, dtype=np.float64)
        b = np.asarray(self.bias, dtype=np.float64)
        if w.ndim != 2 or b.shape != (w.shape[1],):
            raise ShapeMismatch(f"weight {w.shape} and bias {b.shape} do not chain")
        object.__setattr__(self, "weight", w)
        object.__setattr__(self, "bias", b)

    def __call__(self, x):
        return linear(x, self.weight, self.bias)


@dataclass(frozen=True, eq=False)
class ProjectorWeights:
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray

    def __post_init__(self):
        for name in ("W1", "b1", "W2", "b2"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=np.float64))
        if (self.W1.ndim != 2 or self.W2.ndim != 2 or self.b1.shape != (self.W1.shape[1],)
                or self.W2.shape[0] != self.W1.shape[1] or self.b2.shape != (self.W2.shape[1],)):
            raise ShapeMismatch(
                f"projector shapes do not chain: W1 {self.W1.shape}, b1 {self.b1.shape}, "
                f"W2 {self.W2.shape}, b2 {self.b2.shape}")

    @classmethod
    def random(cls, d_in, d_hidden, d_out, seed=0, scale=0.1):
        rng = np.random.default_rng(seed)
        return cls(rng.normal(0, scale, (d_in, d_hidden)), rng.normal(0, scale, d_hidden),
                   rng.normal(0, scale, (d_hidden, d_out)), rng.normal(0, scale, d_out))

    def save(self, directory) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        for name in ("W1", "b1", "W2", "b2"):
            write_tensor(directory / f"{name}.vtf", getattr(self, name).astype(np.float32))

    @classmethod
    def load(cls, directory) -> "ProjectorWeights":
        directory = Path(directory)
        return cls(*(read_tensor(directory / f"{n}.vtf") for n in ("W1", "b1", "W2", "b2")))


@dataclass(frozen=True)
class LossBreakdown:
    reconstruction: float
    classification: float
    weight: float
    total: float

    def to_json(self) -> str:
        return json.dumps(
            {"reconstruction": self.reconstruction, "classification": self.classification,
             "weight": self.weight, "total": self.total},
            sort_keys=True)


# ----------------------------------------------------------------------------
# tokenization


def patchify(video: VideoSequence, geom: TubeletGeometry, embed: Linear) -> TokenTensor:
    """Flatten each tubelet in ``(t, y, x, c)`` order and embed it linearly.

    Tokens are ordered ``(temporal, row, col)`` row-major.
    """
    blocks = geom.tubelets(video.frames.astype(np.float64))
    grid = blocks.shape[:3]
    flat = blocks.reshape(int(np.prod(grid)), -1)
    if embed.weight.shape[0] != flat.shape[1]:
        raise ShapeMismatch(f"embedding expects {embed.weight.shape[0]} inputs, tubelets have {flat.shape[1]}")
    return TokenTensor(embed(flat), tuple(grid))


def temporal_embedding(t: float, dim: int) -> np.ndarray:
    if dim % 2:
        raise OddDimension(f"temporal embedding needs an even dimension, got {dim}")
    i = np.arange(dim // 2, dtype=np.float64)
    angle = t / np.power(10000.0, 2.0 * i / dim)
    out = np.empty(dim)
    out[0::2] = np.sin(angle)
    out[1::2] = np.cos(angle)
    return out


def add_temporal_embedding(tokens: TokenTensor) -> TokenTensor:
    tg = tokens.grid[0]
    per_slice = tokens.shape[0] // tg
    te = np.stack([temporal_embedding(t, tokens.shape[1]) for t in range(tg)])
    return TokenTensor(tokens.values + np.repeat(te, per_slice, axis=0), tokens.grid)


# ----------------------------------------------------------------------------
# activations and layers


def normal_cdf(x):
    return 0.5 * (1.0 + erf(np.asarray(x, dtype=np.float64) / _SQRT2))


def gelu(x):
    """Exact GELU, ``x * Phi(x)``."""
    x = np.asarray(x, dtype=np.float64)
    return x * normal_cdf(x)


def gelu_grad(x):
    x = np.asarray(x, dtype=np.float64)
    return normal_cdf(x) + x * _INV_SQRT_2PI * np.exp(-0.5 * x * x)


def linear(x, weight, bias):
    return np.asarray(x, dtype=np.float64) @ weight + bias


def linear_backward(x, weight, grad_out):
    """Gradients of ``sum(grad_out * linear(x, W, b))`` w.r.t. ``x``, ``W`` and ``b``."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    grad_out = np.atleast_2d(grad_out)
    return grad_out @ weight.T, x.T @ grad_out, grad_out.sum(axis=0)


def project_visual(F, w: ProjectorWeights, activation=gelu):
    """``E = W2 . act(W1 . F + b1) + b2`` applied to every token (row) of ``F``."""
    values = F.values if isinstance(F, TokenTensor) else np.asarray(F, dtype=np.float64)
    if values.ndim != 2 or values.shape[1] != w.W1.shape[0]:
        raise ShapeMismatch(f"tokens {values.shape} do not match W1 {w.W1.shape}")
    out = activation(values @ w.W1 + w.b1) @ w.W2 + w.b2
    return TokenTensor(out, F.grid) if isinstance(F, TokenTensor) else out


def project_visual_backward(F, w: ProjectorWeights, grad_out) -> dict:
    """Gradients of ``sum(grad_out * project_visual(F, w))``."""
    F = F.values if isinstance(F, TokenTensor) else np.asarray(F, dtype=np.float64)
    pre = F @ w.W1 + w.b1
    hidden = gelu(pre)
    g_hidden, g_W2, g_b2 = linear_backward(hidden, w.W2, grad_out)
    g_pre = g_hidden * gelu_grad(pre)
    g_F, g_W1, g_b1 = linear_backward(F, w.W1, g_pre)
    return {"F": g_F, "W1": g_W1, "b1": g_b1, "W2": g_W2, "b2": g_b2}


# ----------------------------------------------------------------------------
# losses


def _mask_rows(token_mask, n):
    if isinstance(token_mask, TokenMask):
        sel = token_mask.flat
    else:
        sel = np.asarray(token_mask, dtype=bool).reshape(-1)
    if sel.shape[0] != n:
        raise ShapeMismatch(f"mask covers {sel.shape[0]} tokens, tensors have {n}")
    if not sel.any():
        raise EmptyMask("reconstruction loss needs at least one masked token")
    return sel


def _values(x):
    return x.values if isinstance(x, TokenTensor) else np.asarray(x, dtype=np.float64)


def standardize_tokens(target, eps=1e-6):
    mean = target.mean(axis=1, keepdims=True)
    var = target.var(axis=1, keepdims=True)
    return (target - mean) / np.sqrt(var + eps)


def mse_loss(pred, target, token_mask, normalize_target: bool = True) -> float:
    """Mean squared error over masked tokens only."""
    pred, target = _values(pred), _values(target)
    if pred.shape != target.shape:
        raise ShapeMismatch(f"pred {pred.shape} vs target {target.shape}")
    sel = _mask_rows(token_mask, pred.shape[0])
    if normalize_target:
        target = standardize_tokens(target)
    diff = pred[sel] - target[sel]
    return float(np.mean(diff * diff))


def mse_loss_grad(pred, target, token_mask, normalize_target: bool = True):
    pred, target = _values(pred), _values(target)
    sel = _mask_rows(token_mask, pred.shape[0])
    if normalize_target:
        target = standardize_tokens(target)
    grad = np.zeros_like(pred)
    grad[sel] = 2.0 * (pred[sel] - target[sel]) / (sel.sum() * pred.shape[1])
    return grad


def _check_label(logits, label):
    logits = np.asarray(logits, dtype=np.float64).reshape(-1)
    if not 0 <= int(label) < logits.size:
        raise LabelOutOfRange(f"label {label} outside 0..{logits.size - 1}")
    return logits, int(label)


def cross_entropy(logits, label) -> float:
    logits, label = _check_label(logits, label)
    shifted = logits - logits.max()
    return float(np.log(np.exp(shifted).sum()) - shifted[label])


def cross_entropy_grad(logits, label):
    logits, label = _check_label(logits, label)
    e = np.exp(logits - logits.max())
    grad = e / e.sum()
    grad[label] -= 1.0
    return grad


def combined_loss(recon: float, attribute_losses, mu: float = 1.0) -> LossBreakdown:
    attribute_losses = [float(a) for a in attribute_losses]
    if len(attribute_losses) != 4:
        raise ValueError(f"expected 4 attribute losses, got {len(attribute_losses)}")
    if recon < 0 or mu < 0 or min(attribute_losses) < 0:
        raise NegativeInput("losses and weight must be non-negative")
    cls = sum(attribute_losses) / 4.0
    return LossBreakdown(float(recon), cls, float(mu), float(recon) + float(mu) * cls)


# ----------------------------------------------------------------------------
# gradient checking


def central_difference(f, x, eps=1e-6):
    x = np.array(x, dtype=np.float64)
    grad = np.zeros_like(x)
    flat_x = x.reshape(-1)
    flat_g = grad.reshape(-1)
    for j in range(flat_x.size):
        orig = flat_x[j]
        flat_x[j] = orig + eps
        fp = f(x)
        flat_x[j] = orig - eps
        fm = f(x)
        flat_x[j] = orig
        flat_g[j] = (fp - fm) / (2.0 * eps)
    return grad


def finite_diff_check(f, grad, x, eps=1e-6) -> float:
    """Max relative gradient error of ``grad(x)`` against central differences of ``f``.

    ``f`` maps an array to a scalar. The error is ``max|g_a - g_n|``
    normalised by the largest gradient magnitude, so components that are
    near zero do not blow up the ratio.
    """
    if not 1e-6 <= eps <= 1e-3:
        raise ValueError(f"eps must lie in [1e-6, 1e-3], got {eps}")
    analytic = np.asarray(grad(np.array(x, dtype=np.float64)), dtype=np.float64)
    numeric = central_difference(f, x, eps)
    scale = max(np.abs(analytic).max(initial=0.0), np.abs(numeric).max(initial=0.0), 1e-12)
    return float(np.abs(analytic - numeric).max(initial=0.0) / scale)
