"""Upsample a coarse 3-axis force field with separable natural cubic splines.

A smooth contact-like field on a 20x20 grid is upsampled 4x. The demo checks
that source knots are reproduced, compares against dense ground truth and
renders magnitude heatmaps.

    python demos/force_field_spline.py --out demo_out/force
"""
import argparse
from pathlib import Path

import numpy as np
from PIL import Image

from vtvkit.cli import heatmap
from vtvkit.tacforce import ForceField, spline_evaluate, spline_interpolate_field, target_positions


def contact_field(ys, xs):
    y, x = np.meshgrid(ys, xs, indexing="ij")
    r2 = (x - 9.5) ** 2 + (y - 9.5) ** 2
    fz = np.exp(-r2 / 30.0)
    return ForceField(0.2 * (x - 9.5) * fz / 5, 0.2 * (y - 9.5) * fz / 5, fz)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="demo_out/force")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    n = 20
    coarse = contact_field(np.arange(n, dtype=float), np.arange(n, dtype=float))
    fine = spline_interpolate_field(coarse)
    print(f"{coarse.resolution} -> {fine.resolution}")

    knots = spline_evaluate(coarse.fz, np.arange(n), np.arange(n))
    print(f"knot reproduction error: {np.abs(knots - coarse.fz).max():.1e}")
    pos = target_positions(n, fine.resolution[0])
    dense = contact_field(pos, pos)
    print(f"max |fz - analytic| on the fine grid: {np.abs(fine.fz - dense.fz).max():.2e}")
    print(f"peak |F|: coarse {coarse.magnitude().max():.4f}, fine {fine.magnitude().max():.4f}")

    fine.save(out / "force_field.vtf")
    Image.fromarray(heatmap(coarse.magnitude())).resize((320, 320), Image.NEAREST).save(out / "coarse.png")
    Image.fromarray(heatmap(fine.magnitude())).resize((320, 320), Image.NEAREST).save(out / "fine.png")
    print(f"wrote {out}/coarse.png, fine.png, force_field.vtf")


if __name__ == "__main__":
    main()
