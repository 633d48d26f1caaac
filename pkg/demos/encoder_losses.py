"""Tokenize a video, project the tokens and evaluate the training losses.

Tubelets are embedded linearly, given sinusoidal temporal embeddings and
passed through the two-layer GELU projector. The masked reconstruction loss,
the four attribute cross-entropies and their weighted total are printed, and
every analytic gradient is checked against central differences.

    python demos/encoder_losses.py
"""
import argparse

import numpy as np

from vtvkit.keyframe import SamplingConfig, keyframe_mask
from vtvkit.neural import (
    Linear,
    ProjectorWeights,
    add_temporal_embedding,
    combined_loss,
    cross_entropy,
    cross_entropy_grad,
    finite_diff_check,
    mse_loss,
    mse_loss_grad,
    patchify,
    project_visual,
    project_visual_backward,
)
from vtvkit.propagate import TubeletGeometry, binarize_tokens, propagate_mask
from vtvkit.flow import MappingField
from vtvkit.synth import InteractionSpec, synth_sequence


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dim", type=int, default=32)
    ap.add_argument("--mu", type=float, default=1.0)
    args = ap.parse_args()
    rng = np.random.default_rng(0)

    video, _ = synth_sequence(InteractionSpec("slide", 2.0, frames=8, texture_seed=2), 64, 64)
    geom = TubeletGeometry(2, 16)
    embed = Linear(rng.normal(0, 0.05, (2 * 16 * 16, args.dim)), np.zeros(args.dim))
    tokens = add_temporal_embedding(patchify(video, geom, embed))
    print(f"tokens {tokens.shape} on grid {tokens.grid}")

    mask, _ = keyframe_mask(video, 4, SamplingConfig(0.5, 16, seed=0))
    masks = propagate_mask(mask, [MappingField.identity(64, 64, t) for t in range(video.num_frames)])
    token_mask = binarize_tokens(masks, geom, 0.75)

    w = ProjectorWeights.random(args.dim, 48, args.dim, seed=1)
    pred = project_visual(tokens, w)
    recon = mse_loss(pred, tokens, token_mask)
    logits = rng.normal(size=(4, 3))
    labels = [0, 2, 1, 2]
    attrs = [cross_entropy(z, y) for z, y in zip(logits, labels)]
    print(combined_loss(recon, attrs, args.mu).to_json())

    F = tokens.values[:3, :6]
    small = ProjectorWeights.random(6, 5, 4, seed=2, scale=0.5)
    G = rng.normal(size=(3, 4))
    grads = project_visual_backward(F, small, G)
    err = finite_diff_check(lambda v: float((project_visual(v, small) * G).sum()), lambda v: grads["F"], F)
    print(f"projector dE/dF relative error vs central differences: {err:.1e}")
    err = finite_diff_check(lambda z: cross_entropy(z, 1), lambda z: cross_entropy_grad(z, 1), logits[0])
    print(f"cross-entropy gradient relative error: {err:.1e}")
    p, t = rng.normal(size=(5, 4)), rng.normal(size=(5, 4))
    m = np.array([1, 0, 1, 1, 0], bool)
    err = finite_diff_check(lambda v: mse_loss(v, t, m), lambda v: mse_loss_grad(v, t, m), p)
    print(f"masked MSE gradient relative error: {err:.1e}")


if __name__ == "__main__":
    main()
