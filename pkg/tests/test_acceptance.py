"""Acceptance gate: one test per criterion, each printing a PASS line.

The desk-scale training criteria (6, 7, 10) train real models with
pilot-tuned configs; their "notes" fields record the tuning rationale.
Run with ``pytest tests/test_acceptance.py -v -s``.
"""

import json
import os
import subprocess
import sys
import time

import numpy as np
import pytest

from dpf import field as F
from dpf import geometry as G
from dpf import trainer as T
from dpf import supervision as S
from dpf.autograd import Tensor, no_grad
from dpf.config import TrainConfig, config_from_obj
from dpf.data_io.checkpoint import load_checkpoint, save_checkpoint
from dpf.data_io.images import read_netpbm
from dpf.data_io.splits import split_every_fifth
from dpf.encoders import (EncoderConfig, backbone_forward, guidance_forward,
                          init_backbone_params, init_guidance_params)
from dpf.field import FieldConfig, SceneFeatures, init_field_params
from dpf.rng import substream

from reference_impls import bilinear_upsample_ref, hinge_ref, whdr_ref


def _ok(num, msg):
    print(f"\n[criterion {num:2d}] PASS — {msg}")


def run_cli(*args):
    return subprocess.run([sys.executable, "-m", "dpf", *args],
                          capture_output=True, text=True)


# -- 1. gradient correctness ---------------------------------------------------------

def test_criterion_01_gradcheck_cli():
    t0 = time.perf_counter()
    proc = run_cli("gradcheck", "--task", "both", "--probes", "60")
    wall = time.perf_counter() - t0
    assert proc.returncode == 0, proc.stdout + proc.stderr
    assert "parsing: PASS" in proc.stdout
    assert "intrinsic: PASS" in proc.stdout
    errs = [float(line.split("worst rel error")[1].split("(")[0])
            for line in proc.stdout.splitlines() if "worst rel error" in line]
    assert len(errs) == 2 and all(e <= 1e-3 for e in errs)
    assert wall < 60.0, f"gradcheck took {wall:.1f}s"
    _ok(1, f"both task composites within 1e-3 of finite differences "
           f"(worst {max(errs):.2e}, {wall:.1f}s)")


# -- 2. weight simplex + convexity ----------------------------------------------------

def test_criterion_02_weight_simplex():
    total = 0
    for seed in range(5):
        enc = EncoderConfig(backbone_widths=(4, 6), downsample=4,
                            guide_blocks=1, guide_width=4)
        params = init_backbone_params(enc, 3, seed)
        params.update(init_guidance_params(enc, seed))
        rng = np.random.default_rng(seed)
        img = Tensor(rng.normal(size=(1, 3, 16, 16)).astype(np.float32))
        gui = Tensor(rng.normal(size=(1, 3, 32, 32)).astype(np.float32))
        with no_grad():
            base, feats = backbone_forward(enc, params, img, "parsing")
            gfeat = guidance_forward(enc, params, gui)
            fcfg = FieldConfig(value_dim=3, feature_dim=6, guide_dim=4,
                               mlp_hidden=(16, 16), pos_levels=4)
            fparams = init_field_params(fcfg, seed)
            coords = rng.uniform(-0.999, 0.999, (200, 2))
            out = F.query(fcfg, fparams, SceneFeatures(base, feats, gfeat),
                          np.zeros(200, dtype=np.int64), coords)
        w = out.weights.data
        assert np.all(w >= 0)
        assert np.abs(w.sum(axis=1) - 1.0).max() <= 1e-5
        v, nv = out.values.data, out.neighbor_values.data
        assert np.all(v <= nv.max(axis=1) + 1e-5)
        assert np.all(v >= nv.min(axis=1) - 1e-5)
        total += len(coords)
    _ok(2, f"{total} random queries: weights on the simplex (1e-5), values "
           f"inside neighbor min/max")


# -- 3. bilinear oracle equivalence ---------------------------------------------------

def test_criterion_03_bilinear_oracle():
    rng = np.random.default_rng(42)
    fcfg = FieldConfig(value_dim=3, feature_dim=1, guide_dim=0,
                       weight_mode="distance")
    worst = 0.0
    for _ in range(100):
        v = rng.normal(size=(3, 8, 8)).astype(np.float32)
        sf = SceneFeatures(base=Tensor(v[None]),
                           feats=Tensor(np.zeros((1, 1, 8, 8), np.float32)),
                           guide=None)
        with no_grad():
            out = F.render(fcfg, {}, sf, G.GridSpec(32, 32))
        worst = max(worst, float(np.abs(out.data - bilinear_upsample_ref(v, 32, 32)).max()))
    assert worst <= 1e-5, worst
    _ok(3, f"distance mode == brute-force bilinear upsampling over 100 "
           f"instances (max abs err {worst:.2e})")


# -- 4. WHDR / classification / hinge oracle ------------------------------------------

def test_criterion_04_whdr_and_hinge_oracle():
    rng = np.random.default_rng(7)
    n = 10_000
    r1 = rng.uniform(0.05, 2.0, n)
    r2 = rng.uniform(0.05, 2.0, n)
    # salt in exact-boundary ratios: r2/r1 == 1.1 exactly in float64
    r1[:50] = 1.0
    r2[:50] = 1.1
    r1[50:100] = 2.0
    r2[50:100] = 2.2
    labels = rng.integers(0, 3, n)
    weights = rng.uniform(0.0, 3.0, n)
    weights[weights.argmax()] += 1.0  # keep total weight positive regardless

    pred = S.classify_pairs(r1, r2)
    ref_pred = np.empty(n, dtype=np.int64)
    for i in range(n):
        if r2[i] / r1[i] > 1.1:
            ref_pred[i] = 1
        elif r1[i] / r2[i] > 1.1:
            ref_pred[i] = 2
        else:
            ref_pred[i] = 0
    assert np.array_equal(pred, ref_pred)
    assert np.all(pred[:100] == 0), "exact 1.1 ratio must stay 'equal'"

    rep = S.whdr(labels, weights, pred)
    assert rep.whdr == whdr_ref(labels, weights, r1, r2)

    # hinge loss zero-set on a 200x200 ratio grid per label
    q1 = np.linspace(0.05, 3.0, 200)
    q2 = np.linspace(0.05, 3.0, 200)
    g1, g2 = np.meshgrid(q1, q2)
    ratio = g1 / g2
    zero_sets = {
        1: ratio <= 1.0 / 1.2,
        2: ratio >= 1.2,
        0: (ratio >= 1.0 / 1.04) & (ratio <= 1.04),
    }
    for lab, satisfied in zero_sets.items():
        losses = S.hinge_pair_losses(
            Tensor(g1.reshape(-1)), Tensor(g2.reshape(-1)),
            np.full(g1.size, lab)).data.reshape(g1.shape)
        np.testing.assert_array_equal(losses == 0.0, satisfied)
        ref = np.array([hinge_ref(a, b, lab)
                        for a, b in zip(g1.reshape(-1)[::397], g2.reshape(-1)[::397])])
        np.testing.assert_allclose(losses.reshape(-1)[::397], ref, rtol=1e-12)
    _ok(4, "classify/WHDR match the straight-line reference on 10^4 tuples "
           "(boundary ratio 1.1 -> equal); hinge zero-set exact on 200x200 grids")


# -- 5. split rule ---------------------------------------------------------------------

def test_criterion_05_split_rule():
    split = split_every_fifth(list(range(1, 11)))
    assert split.test == (1, 6)
    big = split_every_fifth(list(range(1, 5231)))
    assert len(big.test) == 1046
    _ok(5, "ids 1..10 -> test {1, 6}; 5230 ids -> 1046 test scenes")


# -- desk-scale training configs -------------------------------------------------------
# Every value below is pilot-tuned and frozen; the "notes" strings record the
# tuning outcome so the numbers are never silently changed.

def _intrinsic_cfg(seed, use_guidance):
    # notes: lr swept over {3e-5, 1e-4, 3e-4, 1e-3}; 3e-4 best, 1e-3 diverges.
    # 10 epochs on 200 train scenes fits the suite budget; orderings held 3/3
    # seeds in the pilot (full 0.284/0.279/0.262 < no-guide 0.293/0.282/0.268
    # < constant 0.538/0.583/0.571).
    return TrainConfig(
        task="intrinsic", seed=seed, base_lr=3e-4, max_epochs=10, batch_size=2,
        synth_scenes=250, synth_resolution=64, synth_guidance_scale=1,
        synth_regions=8, synth_levels=3, synth_pairs=40, synth_noise=0.05,
        backbone_widths=(8, 16, 16, 32), downsample=4,
        guide_blocks=2, guide_width=16, mlp_hidden=(64, 64), pos_levels=9,
        use_guidance=use_guidance)


def _trend_cfg():
    # notes: input 32, guidance {32, 64, 128}, dense gt at 64 so boundary
    # precision has headroom above the input resolution.  downsample 2 and 3
    # guidance blocks keep the guidance encoder's receptive field wider than
    # one backbone cell at every scale (with ds 4 / 2 blocks the features stop
    # seeing edges at scale 4 and the trend inverts).  lr 0.01 of the parsing
    # sweep; pilot means 0.893/0.904/0.907.
    return TrainConfig(
        task="parsing", seed=0, base_lr=0.01, max_epochs=8, batch_size=2,
        synth_scenes=100, synth_resolution=32, synth_guidance_scale=1,
        synth_gt_scale=2, synth_master_scale=4, synth_regions=8, classes=5,
        synth_points=10, synth_noise=0.05,
        backbone_widths=(8, 16, 16, 24), downsample=2,
        guide_blocks=3, guide_width=12, mlp_hidden=(64, 64), pos_levels=9,
        trend_guidance_scales=(1, 2, 4), trend_seeds=(0, 1, 2))


def _overfit_cfg():
    # notes: dense point coverage (4000 draws over 1024 pixels) makes this a
    # pure capacity/optimization check; downsample 2 keeps per-cell decision
    # boundaries simple enough to fit in 200 steps (ds 4 plateaus at ~0.97
    # with errors on supervised boundary pixels).  lr 0.02: 0.03 overflows in
    # float32.  Pilot mIoU 0.993-1.000 across seeds 0-3.
    return TrainConfig(
        task="parsing", seed=1, base_lr=0.02, max_epochs=200, batch_size=1,
        synth_scenes=1, split_rule="none", synth_resolution=32,
        synth_guidance_scale=2, synth_master_scale=2, synth_regions=4,
        classes=4, synth_points=4000, synth_noise=0.0,
        backbone_widths=(8, 16, 16, 32), downsample=2,
        guide_blocks=2, guide_width=16, mlp_hidden=(128, 128), pos_levels=9)


def _constant_predictor_whdr(cfg):
    """WHDR of a constant-reflectance predictor on the test pairs."""
    scenes, split, ids = T.make_dataset(cfg)
    pos = {sid: k for k, sid in enumerate(ids)}
    labels, weights = [], []
    for sid in split.test:
        for p in scenes[pos[sid]].annotations:
            labels.append(int(p.label))
            weights.append(p.weight)
    labels = np.asarray(labels)
    weights = np.asarray(weights, dtype=np.float64)
    return float(weights[labels != int(S.PairLabel.EQUAL)].sum() / weights.sum())


# -- 6. ablation directions ------------------------------------------------------------

def test_criterion_06_ablation_directions():
    t0 = time.perf_counter()
    seeds = (0, 1, 2)
    intr_ok = 0
    rows = []
    for seed in seeds:
        full = T.train(_intrinsic_cfg(seed, True)).report["dpf_whdr"]
        noguide = T.train(_intrinsic_cfg(seed, False)).report["dpf_whdr"]
        const = _constant_predictor_whdr(_intrinsic_cfg(seed, True))
        rows.append((seed, full, noguide, const))
        intr_ok += (full < noguide < const)
    assert intr_ok >= 2, f"intrinsic ordering held on {intr_ok}/3 seeds: {rows}"

    pars_ok = 0
    prows = []
    for seed in seeds:
        full = T.train(_parsing_ablation_cfg(seed, 1.0)).report["dpf_miou"]
        noaux = T.train(_parsing_ablation_cfg(seed, 0.0)).report["dpf_miou"]
        prows.append((seed, full, noaux))
        pars_ok += (full > noaux)
    wall = time.perf_counter() - t0
    assert pars_ok >= 2, f"parsing ordering held on {pars_ok}/3 seeds: {prows}"
    assert wall < 15 * 60, f"ablation suite took {wall:.0f}s"
    _ok(6, f"intrinsic full<no-guide<constant on {intr_ok}/3 seeds "
           f"{[(s, round(f, 3), round(n, 3), round(c, 3)) for s, f, n, c in rows]}; "
           f"parsing full>no-aux on {pars_ok}/3 seeds "
           f"{[(s, round(f, 3), round(n, 3)) for s, f, n in prows]} ({wall:.0f}s)")


# -- 7. guidance-resolution trend --------------------------------------------------------

def test_criterion_07_guidance_resolution_trend():
    t0 = time.perf_counter()
    table = T.trend_experiment(_trend_cfg())
    means = [table["mean_by_scale"][str(s)] for s in (1, 2, 4)]
    assert means[0] <= means[1] + 1e-12 and means[1] <= means[2] + 1e-12, means
    wall = time.perf_counter() - t0
    _ok(7, f"mean mIoU non-decreasing over guidance 32/64/128: "
           f"{[round(m, 4) for m in means]} ({wall:.0f}s)")


# -- 8. knot reproduction and arbitrary resolution ---------------------------------------

def test_criterion_08_knot_reproduction_and_resolutions(tmp_path):
    rng = np.random.default_rng(3)
    v = rng.normal(size=(4, 8, 8)).astype(np.float32)
    fcfg = FieldConfig(value_dim=4, feature_dim=1, guide_dim=0,
                       weight_mode="distance")
    sf = SceneFeatures(base=Tensor(v[None]),
                       feats=Tensor(np.zeros((1, 1, 8, 8), np.float32)), guide=None)
    with no_grad():
        out = F.render(fcfg, {}, sf, G.GridSpec(8, 8))
    assert np.array_equal(out.data, v), "distance render at the backbone grid != V"

    data = str(tmp_path / "render_data")
    run_cli("synth", "--task", "parsing", "--out", data, "--seed", "4",
            "--n", "1", "--res", "16", "--guidance-scale", "2",
            "--regions", "4", "--classes", "3")
    out_dir = str(tmp_path / "render_run")
    cfg_path = str(tmp_path / "cfg.json")
    with open(cfg_path, "w") as f:
        json.dump({"task": "parsing", "seed": 1, "base_lr": 0.001, "max_epochs": 1,
                   "synth_scenes": 4, "synth_resolution": 16,
                   "synth_guidance_scale": 2, "synth_regions": 4, "classes": 3,
                   "synth_points": 4, "backbone_widths": [4, 8], "downsample": 4,
                   "guide_blocks": 1, "guide_width": 4, "mlp_hidden": [16, 16],
                   "pos_levels": 3, "out_dir": out_dir}, f)
    assert run_cli("train", "--config", cfg_path).returncode == 0
    ckpt = os.path.join(out_dir, "checkpoint.dpf")
    image = os.path.join(data, "00001.ppm")
    guide = os.path.join(data, "00001_guide.ppm")
    # guidance grid is 32x32: render at 0.5x, 1x (default), 4x
    for res_flag, expected in [("16x16", (16, 16)), (None, (32, 32)),
                               ("128x128", (128, 128))]:
        out_path = str(tmp_path / f"r{expected[0]}.pgm")
        args = ["render", "--checkpoint", ckpt, "--image", image,
                "--guidance", guide, "--out", out_path]
        if res_flag:
            args += ["--res", res_flag]
        proc = run_cli(*args)
        assert proc.returncode == 0, proc.stderr
        assert read_netpbm(out_path).shape == (1, *expected)
    _ok(8, "distance render reproduces V exactly; renders at 0.5x/1x/4x the "
           "guidance grid carry correct headers")


# -- 9. determinism -----------------------------------------------------------------------

def test_criterion_09_determinism(tmp_path):
    cfg = {"task": "intrinsic", "seed": 11, "base_lr": 3e-4, "max_epochs": 2,
           "synth_scenes": 10, "synth_resolution": 16, "synth_guidance_scale": 2,
           "synth_regions": 4, "synth_levels": 2, "synth_pairs": 8,
           "backbone_widths": [4, 8], "downsample": 4, "guide_blocks": 1,
           "guide_width": 4, "mlp_hidden": [16, 16], "pos_levels": 3}
    blobs = {}
    for run in ("a", "b"):
        out = str(tmp_path / run)
        cfg_path = str(tmp_path / f"{run}.json")
        with open(cfg_path, "w") as f:
            json.dump({**cfg, "out_dir": out}, f)
        proc = run_cli("train", "--config", cfg_path)
        assert proc.returncode == 0, proc.stderr
        blobs[run] = (open(os.path.join(out, "checkpoint.dpf"), "rb").read(),
                      open(os.path.join(out, "runlog.json"), "rb").read())
    assert blobs["a"][0] == blobs["b"][0], "checkpoints differ"
    assert blobs["a"][1] == blobs["b"][1], "run logs differ"

    tensors, digest, seed = load_checkpoint(str(tmp_path / "a" / "checkpoint.dpf"))
    second = str(tmp_path / "resaved.dpf")
    save_checkpoint(second, tensors, digest, seed)
    assert open(second, "rb").read() == blobs["a"][0], "save/load round trip not bitwise"
    _ok(9, "two identical CLI runs: checkpoint and runlog bytes equal; "
           "checkpoint round trip bitwise")


# -- 10. overfit smoke test -----------------------------------------------------------------

def test_criterion_10_overfit_single_image():
    t0 = time.perf_counter()
    result = T.train(_overfit_cfg())
    miou = result.report["dpf_miou"]
    wall = time.perf_counter() - t0
    assert miou >= 0.99, f"single-image mIoU {miou:.4f}"
    assert wall < 120.0, f"overfit run took {wall:.1f}s"
    _ok(10, f"single-image training reached mIoU {miou:.4f} in {wall:.0f}s")
