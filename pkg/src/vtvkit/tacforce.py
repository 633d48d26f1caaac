"""Natural cubic spline upsampling of low-resolution Tac3D force fields."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import solve_banded

from .errors import SourceTooSmall, TargetSmallerThanSource
from .tensorfile import read_tensor, write_tensor

DEFAULT_UPSAMPLE = 4


@dataclass(frozen=True, eq=False)
class ForceField:
    fx: np.ndarray
    fy: np.ndarray
    fz: np.ndarray

    def __post_init__(self):
        comps = [np.asarray(c, dtype=np.float64) for c in (self.fx, self.fy, self.fz)]
        if comps[0].ndim != 2 or any(c.shape != comps[0].shape for c in comps):
            raise ValueError("force components must be 2-D grids of equal shape")
        if not all(np.isfinite(c).all() for c in comps):
            raise ValueError("force components must be finite")
        for name, c in zip(("fx", "fy", "fz"), comps):
            object.__setattr__(self, name, c)

    @property
    def resolution(self) -> tuple:
        return self.fx.shape

    def stack(self) -> np.ndarray:
        return np.stack([self.fx, self.fy, self.fz])

    def magnitude(self) -> np.ndarray:
        return np.sqrt(self.fx**2 + self.fy**2 + self.fz**2)

    def save(self, path) -> None:
        write_tensor(path, self.stack().astype(np.float32))

    @classmethod
    def load(cls, path) -> "ForceField":
        arr = read_tensor(path)
        if arr.ndim != 3 or arr.shape[0] != 3:
            raise ValueError(f"force field tensor must be (3, H, W), got {arr.shape}")
        return cls(*arr)


def _second_derivative_operator(n: int) -> np.ndarray:
    """``(n, n)`` matrix taking knot values to natural-spline second derivatives.

    Knots sit at unit spacing. The interior rows solve
    ``M[i-1] + 4 M[i] + M[i+1] = 6 (y[i-1] - 2 y[i] + y[i+1])``; the end
    rows are the natural condition ``M = 0``.
    """
    op = np.zeros((n, n))
    m = n - 2
    if m <= 0:
        return op
    ab = np.zeros((3, m))
    ab[0, 1:] = 1.0
    ab[1, :] = 4.0
    ab[2, :-1] = 1.0
    rhs = np.zeros((m, n))
    for i in range(m):
        rhs[i, i : i + 3] = (6.0, -12.0, 6.0)
    op[1:-1] = solve_banded((1, 1), ab, rhs)
    return op


def spline_matrix(n: int, positions) -> np.ndarray:
    """Linear operator evaluating the natural spline through ``n`` knots at ``positions``.

    Positions are in knot units, ``0 <= s <= n - 1``.
    """
    s = np.asarray(positions, dtype=np.float64)
    if n < 2:
        raise ValueError("need at least two knots")
    j = np.clip(np.floor(s).astype(np.intp), 0, n - 2)
    t = s - j
    rows = np.arange(s.size)
    lin = np.zeros((s.size, n))
    curv = np.zeros((s.size, n))
    lin[rows, j] = 1.0 - t
    lin[rows, j + 1] += t
    curv[rows, j] = ((1.0 - t) ** 3 - (1.0 - t)) / 6.0
    curv[rows, j + 1] += (t**3 - t) / 6.0
    return lin + curv @ _second_derivative_operator(n)


def target_positions(n_src: int, n_dst: int) -> np.ndarray:
    """Endpoint-aligned positions of ``n_dst`` target samples in source knot units."""
    if n_dst == 1:
        return np.zeros(1)
    # integer numerator keeps knot-aligned positions exact
    return (np.arange(n_dst) * (n_src - 1)) / (n_dst - 1)


@lru_cache(maxsize=64)
def _resample_matrix(n_src: int, n_dst: int) -> np.ndarray:
    m = spline_matrix(n_src, target_positions(n_src, n_dst))
    m.setflags(write=False)
    return m


def spline_resample(grid, target_h: int, target_w: int) -> np.ndarray:
    """Separable natural-spline resample of one ``(H, W)`` grid: rows first, then columns."""
    grid = np.asarray(grid, dtype=np.float64)
    h, w = grid.shape
    along_rows = grid @ _resample_matrix(w, target_w).T
    return _resample_matrix(h, target_h) @ along_rows


def spline_evaluate(grid, ys, xs) -> np.ndarray:
    """Evaluate the separable spline surface on the tensor grid ``ys x xs`` (knot units)."""
    grid = np.asarray(grid, dtype=np.float64)
    h, w = grid.shape
    return spline_matrix(h, ys) @ (grid @ spline_matrix(w, xs).T)


def spline_interpolate_field(field: ForceField, target_h: int | None = None,
                             target_w: int | None = None) -> ForceField:
    h, w = field.resolution
    if h < 4 or w < 4:
        raise SourceTooSmall(f"source field {h}x{w} is smaller than 4x4")
    target_h = DEFAULT_UPSAMPLE * h if target_h is None else int(target_h)
    target_w = DEFAULT_UPSAMPLE * w if target_w is None else int(target_w)
    if target_h < h or target_w < w:
        raise TargetSmallerThanSource(f"target {target_h}x{target_w} is smaller than source {h}x{w}")
    return ForceField(*(spline_resample(c, target_h, target_w) for c in (field.fx, field.fy, field.fz)))


def knot_indices(n_src: int, n_dst: int):
    """Target indices that land exactly on source knots (``None`` where a knot falls between samples)."""
    out = []
    for i in range(n_src):
        num = i * (n_dst - 1)
        out.append(num // (n_src - 1) if num % (n_src - 1) == 0 else None)
    return out
