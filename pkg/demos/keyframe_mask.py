"""Build a Gaussian keyframe mask for a synthetic press video.

The keyframe is chosen two ways (middle frame and maximum contact), then
N = ceil(alpha * H * W / beta^2) stratified points each spread a Gaussian
bump; the clamped sum is the mask (1 = hidden from the encoder).

    python demos/keyframe_mask.py --out demo_out/keyframe
"""
import argparse
from pathlib import Path

import numpy as np
from PIL import Image

from vtvkit.keyframe import SamplingConfig, keyframe_mask, num_sampling_points, select_keyframe, write_pgm16
from vtvkit.propagate import overlay
from vtvkit.synth import InteractionSpec, synth_sequence


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="demo_out/keyframe")
    ap.add_argument("--alpha", type=float, default=0.25)
    ap.add_argument("--beta", type=int, default=16)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    video, _ = synth_sequence(InteractionSpec("press", 2.0, frames=9, texture_seed=3), 224, 224)
    k_mid = select_keyframe(video, "middle")
    k_max = select_keyframe(video, "max_contact")
    print(f"middle keyframe = {k_mid}, max-contact keyframe = {k_max}")

    cfg = SamplingConfig(args.alpha, args.beta, seed=args.seed)
    print(f"N = ceil({args.alpha} * 224 * 224 / {args.beta}^2) = {num_sampling_points(224, 224, args.alpha, args.beta)}")
    mask, points = keyframe_mask(video, k_mid, cfg)
    print(f"lambda = {cfg.kernel_scale}, mask mean = {mask.values.mean():.3f}, "
          f"min at points = {mask.values[points[:, 1].astype(int), points[:, 0].astype(int)].min()}")

    write_pgm16(out / "keyframe_mask.pgm", mask)
    Image.fromarray(overlay(video.frames[k_mid], mask)).save(out / "keyframe_overlay.png")
    for lam in (4.0, 8.0, 16.0):
        m, _ = keyframe_mask(video, k_mid, SamplingConfig(args.alpha, args.beta, lam, args.seed))
        print(f"  lambda={lam:>4}: mean mask {m.values.mean():.3f}, fully masked share {np.mean(m.values == 1.0):.3f}")
    print(f"wrote {out}/keyframe_mask.pgm and keyframe_overlay.png")


if __name__ == "__main__":
    main()
