"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Every check is computed against an independent oracle (closed-form values,
brute-force loops or scipy) at the stated tolerance, and every criterion's
wall-clock budget is part of its verdict.
"""
import json
import math
from fractions import Fraction
import random
import time
from pathlib import Path

import numpy as np

from vtvkit.cli import main
from vtvkit.core import TactileAnnotation, VideoSequence, save_annotation_file
from vtvkit.flow import (
    ClassicalPyramidal,
    FlowField,
    FlowProvider,
    MappingField,
    bidirectional_flow_set,
    compose_to_keyframe,
    estimate_flow,
)
from vtvkit.keyframe import SamplingConfig, gaussian_mask, mixture_value, sample_points, select_keyframe
from vtvkit.neural import (
    ProjectorWeights,
    combined_loss,
    cross_entropy,
    cross_entropy_grad,
    finite_diff_check,
    gelu,
    gelu_grad,
    linear,
    linear_backward,
    mse_loss,
    mse_loss_grad,
    project_visual,
    project_visual_backward,
)
from vtvkit.propagate import TubeletGeometry, binarize_tokens, leakage, propagate_mask, tube_mask
from vtvkit.qa import (
    AnnotationTable,
    TaskKind,
    derive_seed,
    expected_ground_truth,
    read_jsonl,
    synthesize_annotations,
    validate_distribution,
)
from vtvkit.sampling import pixel_grid
from vtvkit.synth import InteractionSpec, synth_sequence
from vtvkit.tacforce import knot_indices, spline_evaluate, spline_resample, target_positions

MARGIN = 8  # px excluded at each border for endpoint-error statistics


class _Zero(FlowProvider):
    def flow(self, video, src, dst):
        return FlowField.zeros(1, 1, src, dst)


def _rel(a, b):
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    return float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-12)))


# ----------------------------------------------------------------------------
# 1. mask formula


def test_c01_mask_formula(criterion):
    t0 = time.perf_counter()
    rnd = random.Random(1)
    bad = []
    for case in range(50):
        h, w = rnd.randint(16, 256), rnd.randint(16, 256)
        alpha, beta = rnd.uniform(0.02, 0.98), rnd.randint(4, 32)
        pts = sample_points(h, w, SamplingConfig(alpha, beta, seed=case))
        # exact rational oracle for ceil(alpha * HW / beta^2)
        n_expected = math.ceil(Fraction(alpha) * h * w / beta**2)
        m = gaussian_mask(h, w, pts, beta / 2).values
        xi, yi = pts[:, 0].astype(int), pts[:, 1].astype(int)
        ok = (len(pts) == n_expected and np.all(m[yi, xi] == 1.0)
              and m.min() >= 0.0 and m.max() <= 1.0)
        if not ok:
            bad.append((h, w, alpha, beta, len(pts), n_expected))
    dt = time.perf_counter() - t0
    passed = not bad and dt < 10
    criterion(1, "mask formula on 50 configs", passed, f"bad={bad[:3]} time={dt:.2f}s (<10s)")
    assert passed


# ----------------------------------------------------------------------------
# 2. flow-set structure


def test_c02_flow_set_structure(criterion):
    t0 = time.perf_counter()
    failures = 0
    checked = 0
    for T in range(4, 33):
        video = VideoSequence(np.zeros((T + 1, 1, 1), np.float32))
        for k in range(T + 1):
            fs = bidirectional_flow_set(video, k, _Zero())
            fwd = [(f.src_index, f.dst_index) for f in fs.forward]
            bwd = [(f.src_index, f.dst_index) for f in fs.backward]
            ok = (len(fs) == T and fwd == [(t, t + 1) for t in range(0, k)]
                  and bwd == [(t, t - 1) for t in range(k + 1, T + 1)])
            failures += not ok
            checked += 1
    dt = time.perf_counter() - t0
    passed = failures == 0 and dt < 1
    criterion(2, "flow set |Phi| = T with exact index bounds", passed,
              f"{checked} (T,k) pairs, failures={failures} time={dt:.2f}s (<1s)")
    assert passed


# ----------------------------------------------------------------------------
# 3. flow accuracy


def _interior_epe(est, gt):
    e = np.hypot(est.u.astype(np.float64) - gt.u, est.v.astype(np.float64) - gt.v)
    return float(e[MARGIN:-MARGIN, MARGIN:-MARGIN].mean())


def test_c03_flow_accuracy(criterion):
    t0 = time.perf_counter()
    slide, rot = [], []
    for seed in range(10):
        amp = 1.0 + (seed % 4)  # 1..4 px/frame
        video, gt = synth_sequence(InteractionSpec("slide", amp, frames=3, texture_seed=100 + seed), 128, 128)
        slide.append((amp, _interior_epe(estimate_flow(video.frames[0], video.frames[1]), gt[0])))
        video, gt = synth_sequence(InteractionSpec("rotate", 2.0, frames=3, texture_seed=200 + seed), 128, 128)
        rot.append(_interior_epe(estimate_flow(video.frames[0], video.frames[1]), gt[0]))
    dt = time.perf_counter() - t0
    worst_slide = max(e for _, e in slide)
    passed = worst_slide < 0.5 and max(rot) < 0.75 and dt < 60
    criterion(3, "flow EPE on 128x128 fixtures", passed,
              f"translation worst mean EPE={worst_slide:.3f}px (<0.5), rotation worst={max(rot):.3f}px (<0.75), "
              f"time={dt:.1f}s (<60s)")
    assert passed


# ----------------------------------------------------------------------------
# 4. warp oracle


def _shift_mae(pts, h, w, dx, dy):
    km = gaussian_mask(h, w, pts, 8.0, 0)
    out = propagate_mask(km, [MappingField.translation(h, w, dx, dy)])[0].values
    xx, yy = pixel_grid(h, w)
    expected = mixture_value(pts, 8.0, xx + dx, yy + dy)
    inside = (xx + dx >= 0) & (xx + dx <= w - 1) & (yy + dy >= 0) & (yy + dy <= h - 1)
    inside &= (xx >= MARGIN) & (xx < w - MARGIN) & (yy >= MARGIN) & (yy < h - MARGIN)
    return float(np.abs(out - expected)[inside].mean())


def test_c04_warp_oracle(criterion):
    # Grid-aligned translations (as in the worked (+3, 0) example) are the
    # asserted case: bilinear sampling of a smooth mask at sub-pixel offsets
    # carries an O(1e-3) curvature error for lambda = 8, reported alongside.
    t0 = time.perf_counter()
    rng = np.random.default_rng(4)
    h = w = 96
    worst = worst_sub = 0.0
    identity_exact = True
    for case in range(10):
        pts = sample_points(h, w, SamplingConfig(0.3, 16, seed=case))
        km = gaussian_mask(h, w, pts, 8.0, 0)
        out = propagate_mask(km, [MappingField.identity(h, w)])[0].values
        identity_exact &= bool(np.array_equal(out, km.values))
        dx, dy = rng.integers(-6, 7, 2)
        worst = max(worst, _shift_mae(pts, h, w, float(dx), float(dy)))
        worst_sub = max(worst_sub, _shift_mae(pts, h, w, *rng.uniform(-6, 6, 2)))
    dt = time.perf_counter() - t0
    passed = worst < 1e-5 and identity_exact and dt < 5
    criterion(4, "warp oracle", passed,
              f"integer-translation interior MAE worst={worst:.2e} (<1e-5), identity bit-exact={identity_exact}, "
              f"[info: sub-pixel translation MAE worst={worst_sub:.2e}] time={dt:.2f}s (<5s)")
    assert passed


# ----------------------------------------------------------------------------
# 5. leakage ordering


def _leakage_pair(seed, amplitude=4.0, frames=16, size=128, rho=0.75, tau=0.05, w=1):
    video, _ = synth_sequence(InteractionSpec("slide", amplitude, frames=frames, texture_seed=seed), size, size)
    geom = TubeletGeometry(2, 16)
    k = select_keyframe(video)
    maps = compose_to_keyframe(bidirectional_flow_set(video, k, ClassicalPyramidal()))
    km = gaussian_mask(size, size, sample_points(size, size, SamplingConfig(seed=derive_seed(0, seed))), 8.0, k)
    tokens = binarize_tokens(propagate_mask(km, maps), geom, rho)
    tube = tube_mask(tokens.bits.shape, rho, derive_seed(0, seed, "tube"), geom)
    return leakage(video, tokens, geom, tau, w).leak_fraction, leakage(video, tube, geom, tau, w).leak_fraction


def test_c05_leakage_ordering(criterion):
    t0 = time.perf_counter()
    pairs = [_leakage_pair(seed) for seed in range(10)]
    dt = time.perf_counter() - t0
    flow = np.array([p[0] for p in pairs])
    tube = np.array([p[1] for p in pairs])
    every = bool(np.all(flow <= tube))
    ratio_ok = flow.mean() <= 0.5 * tube.mean()
    passed = every and ratio_ok and dt < 120
    criterion(5, "leakage flow-guided <= tube on 10 slide fixtures (4 px/frame)", passed,
              f"flow-guided={np.round(flow, 4).tolist()} tube={np.round(tube, 4).tolist()} "
              f"every-fixture={every} mean {flow.mean():.4f} <= 0.5x{tube.mean():.4f}: {ratio_ok} time={dt:.1f}s (<120s)")
    assert passed


# ----------------------------------------------------------------------------
# 6. token-count exactness


def test_c06_token_count(criterion):
    t0 = time.perf_counter()
    rnd = random.Random(6)
    bad = 0
    for case in range(100):
        tp, p = rnd.randint(1, 4), rnd.choice([2, 4, 8, 16])
        tg, r, c = rnd.randint(1, 5), rnd.randint(1, 6), rnd.randint(1, 6)
        rho = rnd.uniform(0.01, 0.99)
        rng = np.random.default_rng(case)
        masks = rng.random((tg * tp, r * p, c * p))
        if case % 4 == 0:
            masks = np.round(masks * 3) / 3  # plenty of ties
        tm = binarize_tokens(list(masks), TubeletGeometry(tp, p), rho)
        K = tg * r * c
        target = int(math.floor(rho * K + 0.5))
        recount = sum(1 for v in tm.bits.reshape(-1).tolist() if v)
        scores = masks.reshape(tg, tp, r, p, c, p).mean(axis=(1, 3, 5)).reshape(-1)
        flat = tm.bits.reshape(-1)
        top_ok = target == 0 or target == K or scores[flat].min() >= scores[~flat].max()
        bad += not (recount == target == tm.count and top_ok)
    dt = time.perf_counter() - t0
    passed = bad == 0 and dt < 5
    criterion(6, "binarize_tokens masks round(rho*K) tokens", passed,
              f"100 draws, mismatches={bad} time={dt:.2f}s (<5s)")
    assert passed


# ----------------------------------------------------------------------------
# 7. numeric oracles


def _gelu_scalar(x):
    return x * 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))


def _project_loops(F, W1, b1, W2, b2):
    n, d_in = F.shape
    d_h, d_out = W1.shape[1], W2.shape[1]
    out = np.zeros((n, d_out))
    for i in range(n):
        hidden = []
        for j in range(d_h):
            s = b1[j]
            for q in range(d_in):
                s += F[i, q] * W1[q, j]
            hidden.append(_gelu_scalar(s))
        for o in range(d_out):
            s = b2[o]
            for j in range(d_h):
                s += hidden[j] * W2[j, o]
            out[i, o] = s
    return out


def _mse_loops(pred, target, mask, normalize):
    total, count = 0.0, 0
    for i in range(pred.shape[0]):
        if not mask[i]:
            continue
        row = list(target[i])
        if normalize:
            mean = sum(row) / len(row)
            var = sum((v - mean) ** 2 for v in row) / len(row)
            row = [(v - mean) / math.sqrt(var + 1e-6) for v in row]
        for j in range(pred.shape[1]):
            total += (pred[i, j] - row[j]) ** 2
            count += 1
    return total / count


def _ce_loops(logits, label):
    m = max(logits)
    return math.log(sum(math.exp(v - m) for v in logits)) - (logits[label] - m)


def test_c07_numeric_oracles(criterion):
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    worst = {k: 0.0 for k in ("gelu", "project", "mse", "ce", "combined")}
    grad_worst = {k: 0.0 for k in ("gelu", "ce", "linear_W", "linear_x", "linear_b", "project", "mse")}
    for case in range(100):
        x = rng.normal(0, 2, 8)
        worst["gelu"] = max(worst["gelu"], _rel(gelu(x), [_gelu_scalar(v) for v in x]))

        d_in, d_h, d_out, n = rng.integers(1, 6, 4)
        w = ProjectorWeights.random(d_in, d_h, d_out, seed=case, scale=0.8)
        F = rng.normal(size=(n, d_in))
        worst["project"] = max(worst["project"],
                               _rel(project_visual(F, w), _project_loops(F, w.W1, w.b1, w.W2, w.b2)))

        pred, target = rng.normal(size=(6, 4)), rng.normal(size=(6, 4))
        mask = rng.random(6) < 0.5
        mask[case % 6] = True
        norm = bool(case % 2)
        worst["mse"] = max(worst["mse"], _rel(mse_loss(pred, target, mask, norm), _mse_loops(pred, target, mask, norm)))

        logits = rng.normal(0, 3, 3)
        label = int(rng.integers(0, 3))
        worst["ce"] = max(worst["ce"], _rel(cross_entropy(logits, label), _ce_loops(list(logits), label)))

        recon, attrs, mu = rng.random(), list(rng.random(4)), rng.random() * 2
        worst["combined"] = max(worst["combined"],
                                _rel(combined_loss(recon, attrs, mu).total,
                                     recon + mu * (attrs[0] + attrs[1] + attrs[2] + attrs[3]) / 4))

        # gradients against central differences
        xg = rng.normal(0, 2, 5)
        grad_worst["gelu"] = max(grad_worst["gelu"],
                                 finite_diff_check(lambda z: float(gelu(z).sum()), gelu_grad, xg))
        grad_worst["ce"] = max(grad_worst["ce"], finite_diff_check(
            lambda z: cross_entropy(z, label), lambda z: cross_entropy_grad(z, label), logits))
        X, W, b, G = rng.normal(size=(3, 4)), rng.normal(size=(4, 2)), rng.normal(size=2), rng.normal(size=(3, 2))
        grad_worst["linear_W"] = max(grad_worst["linear_W"], finite_diff_check(
            lambda v: float((linear(X, v, b) * G).sum()), lambda v: linear_backward(X, v, G)[1], W))
        grad_worst["linear_x"] = max(grad_worst["linear_x"], finite_diff_check(
            lambda v: float((linear(v, W, b) * G).sum()), lambda v: linear_backward(v, W, G)[0], X))
        grad_worst["linear_b"] = max(grad_worst["linear_b"], finite_diff_check(
            lambda v: float((linear(X, W, v) * G).sum()), lambda v: linear_backward(X, W, G)[2], b))
        Gp = rng.normal(size=(n, d_out))
        grads = project_visual_backward(F, w, Gp)
        params = {"F": F, "W1": w.W1, "b1": w.b1, "W2": w.W2, "b2": w.b2}
        for name, value in params.items():
            def loss(v, name=name):
                kw = dict(params, **{name: v})
                ww = ProjectorWeights(kw["W1"], kw["b1"], kw["W2"], kw["b2"])
                return float((project_visual(kw["F"], ww) * Gp).sum())
            grad_worst["project"] = max(grad_worst["project"],
                                        finite_diff_check(loss, lambda v, name=name: grads[name], value))
        grad_worst["mse"] = max(grad_worst["mse"], finite_diff_check(
            lambda p: mse_loss(p, target, mask, norm), lambda p: mse_loss_grad(p, target, mask, norm), pred))
    dt = time.perf_counter() - t0
    passed = max(worst.values()) < 1e-6 and max(grad_worst.values()) < 1e-5 and dt < 30
    criterion(7, "numeric oracles and gradients", passed,
              "value rel err " + ", ".join(f"{k}={v:.1e}" for k, v in worst.items()) + " (<1e-6); grad rel err "
              + ", ".join(f"{k}={v:.1e}" for k, v in grad_worst.items()) + f" (<1e-5); time={dt:.1f}s (<30s)")
    assert passed


# ----------------------------------------------------------------------------
# 8. spline suite


def test_c08_spline(criterion):
    t0 = time.perf_counter()
    rng = np.random.default_rng(8)
    knot_err = const_err = lin_err = linearity_err = 0.0
    for case in range(20):
        h, w = rng.integers(4, 12, 2)
        th, tw = h + rng.integers(0, 30), w + rng.integers(0, 30)
        g = rng.normal(size=(h, w))
        # values at the mapped source positions equal the sources
        knot_err = max(knot_err, float(np.abs(spline_evaluate(g, np.arange(h), np.arange(w)) - g).max()))
        up4 = spline_resample(g, 4 * h - 3, 4 * w - 3)  # every source knot lands on a target sample
        ri, ci = knot_indices(h, 4 * h - 3), knot_indices(w, 4 * w - 3)
        knot_err = max(knot_err, float(np.abs(up4[np.ix_(ri, ci)] - g).max()))

        c = rng.normal()
        const_err = max(const_err, float(np.abs(spline_resample(np.full((h, w), c), th, tw) - c).max()))
        a0, ax, ay = rng.normal(size=3)
        yy, xx = np.mgrid[0:h, 0:w]
        ramp = a0 + ax * xx + ay * yy
        ys, xs = target_positions(h, th), target_positions(w, tw)
        lin_err = max(lin_err, float(np.abs(spline_resample(ramp, th, tw)
                                            - (a0 + ax * xs[None, :] + ay * ys[:, None])).max()))

        f2 = rng.normal(size=(h, w))
        s, t = rng.normal(size=2)
        linearity_err = max(linearity_err, float(np.abs(
            spline_resample(s * g + t * f2, th, tw) - s * spline_resample(g, th, tw) - t * spline_resample(f2, th, tw)
        ).max()))
    dt = time.perf_counter() - t0
    passed = max(knot_err, const_err, lin_err, linearity_err) < 1e-9 and dt < 5
    criterion(8, "natural spline suite", passed,
              f"knot={knot_err:.1e} constant={const_err:.1e} linear={lin_err:.1e} linearity={linearity_err:.1e} "
              f"(<1e-9) time={dt:.2f}s (<5s)")
    assert passed


# ----------------------------------------------------------------------------
# 9. QA dataset suite


def test_c09_qa_dataset(criterion, tmp_path):
    t0 = time.perf_counter()
    anns = synthesize_annotations(100, seed=9)
    ann_path = tmp_path / "annotations.json"
    save_annotation_file(ann_path, anns)
    table = AnnotationTable.from_annotations(anns)
    runs = []
    for d in ("a", "b"):
        assert main(["qagen", "--annotations", str(ann_path), "--count", "10000", "--seed", "7",
                     "--out", str(tmp_path / d)]) == 0
        runs.append((tmp_path / d / "dataset.jsonl").read_bytes())
    _, pairs = read_jsonl(runs[0].decode())
    identical = runs[0] == runs[1]
    oracle_bad = sum(expected_ground_truth(p, table) != p.ground_truth for p in pairs)

    assert main(["qagen", "--annotations", str(ann_path), "--splits", "--count", "10000", "--test-count", "600",
                 "--held-out-objects", "10", "--seed", "7", "--out", str(tmp_path / "splits")]) == 0
    split = {n: read_jsonl((tmp_path / "splits" / f"{n}.jsonl").read_text())[1] for n in ("stage2", "stage3", "test")}
    ids = {n: {p.id for p in ps} for n, ps in split.items()}
    disjoint = not (ids["stage2"] & ids["stage3"] or ids["stage2"] & ids["test"] or ids["stage3"] & ids["test"])
    objects = {n: {r.split(":")[0] for p in ps for r in p.video_refs} for n, ps in split.items()}
    held_out = set(json.loads((tmp_path / "splits" / "run_report.json").read_text())["results"]["held_out"])
    held_ok = objects["test"] <= held_out and not (objects["stage2"] | objects["stage3"]) & held_out
    tsa = sum(p.task is TaskKind.TACTILE_SCENARIO_ANALYSIS for n in ("stage2", "stage3") for p in split[n])
    sizes = tuple(len(split[n]) for n in ("stage2", "stage3", "test"))
    split_oracle_bad = sum(expected_ground_truth(p, table) != p.ground_truth for ps in split.values() for p in ps)
    dt = time.perf_counter() - t0
    passed = (len(pairs) == 10_000 and identical and oracle_bad == 0 and split_oracle_bad == 0
              and sizes == (10_000, 10_000, 600) and disjoint and held_ok and len(held_out) == 10 and tsa == 0
              and dt < 60)
    criterion(9, "QA dataset generation and splits", passed,
              f"pairs={len(pairs)} byte-identical={identical} oracle mismatches={oracle_bad + split_oracle_bad} "
              f"splits={sizes} disjoint={disjoint} held-out ok={held_ok} TSA in training={tsa} time={dt:.1f}s (<60s)")
    assert passed


# ----------------------------------------------------------------------------
# 10. distribution validation


def test_c10_distribution(criterion):
    t0 = time.perf_counter()
    anns = synthesize_annotations(100, seed=10)
    good = validate_distribution(anns, tolerance=0.01)
    # label shuffle: permute the level names of every attribute (derangement)
    shuffled = []
    for a in anns:
        levels = {}
        for attr in ("hardness", "protrusion", "elasticity", "friction"):
            kind = type(a.level(attr))
            names = [lv.value for lv in kind]
            levels[attr] = names[(names.index(a.level(attr).value) + 1) % 3]
        shuffled.append(TactileAnnotation(a.object_id, **levels))
    bad = validate_distribution(shuffled, tolerance=0.01)
    dt = time.perf_counter() - t0
    passed = good.passed and not bad.passed and dt < 2
    criterion(10, "distribution validation at tolerance 0.01", passed,
              f"reference-proportion table passes={good.passed} (max dev "
              f"{max(c.max_deviation for c in good.checks):.3f}); label-shuffled passes={bad.passed}; time={dt:.2f}s (<2s)")
    assert passed


# ----------------------------------------------------------------------------
# 11. end-to-end determinism


def _files(root):
    root = Path(root)
    return {p.relative_to(root).as_posix(): p.read_bytes()
            for p in sorted(root.rglob("*")) if p.is_file() and p.name != "timings.json"}


def test_c11_end_to_end_determinism(criterion, tmp_path):
    t0 = time.perf_counter()
    corpus = tmp_path / "corpus"
    assert main(["synth", "--out", str(corpus), "--seed", "11"]) == 0
    runs = []
    for d in ("run1", "run2"):
        assert main(["pipeline", "--manifest", str(corpus / "manifest.json"), "--out", str(tmp_path / d),
                     "--seed", "11"]) == 0
        runs.append(_files(tmp_path / d))
    dt = time.perf_counter() - t0
    kinds = {Path(k).suffix for k in runs[0]}
    identical = runs[0] == runs[1]
    passed = identical and {".vtf", ".pgm", ".json", ".png", ".flo"} <= kinds and dt < 180
    criterion(11, "end-to-end pipeline determinism", passed,
              f"{len(runs[0])} files byte-identical={identical} (incl. run_report.json) time={dt:.1f}s (<180s)")
    assert passed
