"""Training, evaluation, rendering, gradient checking, and the resolution
trend experiment.

Training queries the field only at annotated coordinates (plus comparison
endpoints); full-grid rendering happens at evaluation time.  Every
stochastic choice draws from a named substream of the config seed, so a
(seed, config, data) triple fully determines the run, including checkpoint
bytes.  Per-epoch wall times are printed but kept out of the serialized
run log to preserve that determinism.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, replace

import numpy as np

from . import field as field_mod
from . import geometry
from .autograd import Parameter, Tensor, bilinear_sample, gather_rows, no_grad
from .config import TrainConfig, config_from_obj, save_config
from .data_io.checkpoint import load_checkpoint, save_checkpoint
from .data_io.datasets import load_dataset
from .data_io.splits import DatasetSplit, split_every_fifth
from .data_io.synthetic import SceneSample, SyntheticConfig, generate_scene
from .encoders import (EncoderConfig, backbone_forward, guidance_forward,
                       init_backbone_params, init_guidance_params,
                       squash_reflectance)
from .errors import ContractError, NumericsError, SchemaError
from .field import FieldConfig, SceneFeatures, flatten_maps, init_field_params
from .gradcheck import GradCheckResult, cast_params, grad_check
from .kernels import set_backend
from .optim import OptimState, poly_lr, sgd_step, zero_grads
from .rng import Stream, substream
from .supervision import (ComparisonPair, PointLabel, ce_point_loss,
                          classify_pairs, confusion_matrix, hinge_pair_losses,
                          miou_from_confusion, pair_loss_total, total_loss, whdr)

_COORD_CAP = 1.0 - 1e-6  # continuous [0,1] endpoints clamp strictly inside (-1,1)


@dataclass
class ModelBundle:
    cfg: TrainConfig
    enc_cfg: EncoderConfig
    field_cfg: FieldConfig
    params: dict[str, Parameter]

    @property
    def param_list(self) -> list[Parameter]:
        return list(self.params.values())


@dataclass
class TrainResult:
    bundle: ModelBundle
    runlog: dict
    report: dict
    checkpoint_path: str | None


def build_model(cfg: TrainConfig) -> ModelBundle:
    enc_cfg = EncoderConfig(backbone_widths=cfg.backbone_widths,
                            downsample=cfg.downsample,
                            guide_blocks=cfg.guide_blocks,
                            guide_width=cfg.effective_guide_width)
    field_cfg = FieldConfig(value_dim=cfg.value_dim,
                            feature_dim=enc_cfg.feature_dim,
                            guide_dim=enc_cfg.guide_width,
                            mlp_hidden=cfg.mlp_hidden,
                            pos_levels=cfg.pos_levels,
                            weight_mode=cfg.weight_mode)
    params: dict[str, Parameter] = {}
    params.update(init_backbone_params(enc_cfg, cfg.value_dim, cfg.seed))
    if enc_cfg.guide_width:
        params.update(init_guidance_params(enc_cfg, cfg.seed))
    params.update(init_field_params(field_cfg, cfg.seed))
    return ModelBundle(cfg=cfg, enc_cfg=enc_cfg, field_cfg=field_cfg, params=params)


def synthetic_config(cfg: TrainConfig) -> SyntheticConfig:
    return SyntheticConfig(task=cfg.task, resolution=cfg.synth_resolution,
                           guidance_scale=cfg.synth_guidance_scale,
                           regions=cfg.synth_regions, classes=cfg.classes,
                           levels=cfg.synth_levels,
                           points_per_image=cfg.synth_points,
                           pairs_per_image=cfg.synth_pairs,
                           noise=cfg.synth_noise,
                           label_noise=cfg.synth_label_noise,
                           gt_scale=cfg.synth_gt_scale,
                           master_scale=cfg.synth_master_scale,
                           context_classes=cfg.synth_context_classes)


def make_dataset(cfg: TrainConfig) -> tuple[list[SceneSample], DatasetSplit, list[int]]:
    """Scenes plus the id split; scene list index = id position in ``ids``."""
    if cfg.data_dir:
        manifest, ids, scenes = load_dataset(cfg.data_dir)
        if manifest["task"] != cfg.task:
            raise ContractError(f"dataset task {manifest['task']!r} does not match "
                                f"config task {cfg.task!r}")
    else:
        ids = list(range(1, cfg.synth_scenes + 1))
        scfg = synthetic_config(cfg)
        scenes = [generate_scene(scfg, cfg.seed, i) for i in ids]
    if cfg.split_rule == "none":
        split = DatasetSplit(train=tuple(ids), test=tuple(ids))
    else:
        split = split_every_fifth(ids)
    return scenes, split, ids


# -- augmentation ------------------------------------------------------------------

def hflip_sample(s: SceneSample) -> SceneSample:
    w = s.image.shape[2]
    points = None
    if s.annotations and isinstance(s.annotations[0], PointLabel):
        points = [PointLabel(row=p.row, col=w - 1 - p.col, label=p.label)
                  for p in s.annotations]
    elif s.annotations and isinstance(s.annotations[0], ComparisonPair):
        points = [ComparisonPair(p1=(1.0 - p.p1[0], p.p1[1]),
                                 p2=(1.0 - p.p2[0], p.p2[1]),
                                 label=p.label, weight=p.weight)
                  for p in s.annotations]
    return SceneSample(
        image=s.image[:, :, ::-1].copy(),
        guidance=s.guidance[:, :, ::-1].copy(),
        annotations=points if points is not None else list(s.annotations),
        gt_labels=None if s.gt_labels is None else s.gt_labels[:, ::-1].copy(),
        gt_reflectance=(None if s.gt_reflectance is None
                        else s.gt_reflectance[:, ::-1].copy()),
        meta=dict(s.meta))


def crop_sample(s: SceneSample, crop: int, oy: int, ox: int) -> SceneSample:
    """Crop to crop x crop at offset (oy, ox); annotations outside are dropped."""
    h, w = s.image.shape[1:]
    if crop > min(h, w):
        raise ContractError(f"crop {crop} exceeds image {h}x{w}")
    hg = s.guidance.shape[1]
    if hg % h:
        raise ContractError("guidance resolution must be an integer multiple for cropping")
    scale = hg // h
    annotations: list = []
    for a in s.annotations:
        if isinstance(a, PointLabel):
            if oy <= a.row < oy + crop and ox <= a.col < ox + crop:
                annotations.append(PointLabel(row=a.row - oy, col=a.col - ox,
                                              label=a.label))
        else:
            remapped = []
            for (x, y) in (a.p1, a.p2):
                nx = (x * w - ox) / crop
                ny = (y * h - oy) / crop
                remapped.append((nx, ny))
            if all(0.0 <= v <= 1.0 for pt in remapped for v in pt):
                annotations.append(ComparisonPair(p1=remapped[0], p2=remapped[1],
                                                  label=a.label, weight=a.weight))
    return SceneSample(
        image=s.image[:, oy:oy + crop, ox:ox + crop].copy(),
        guidance=s.guidance[:, scale * oy:scale * (oy + crop),
                            scale * ox:scale * (ox + crop)].copy(),
        annotations=annotations,
        gt_labels=None if s.gt_labels is None else s.gt_labels[oy:oy + crop,
                                                               ox:ox + crop].copy(),
        gt_reflectance=(None if s.gt_reflectance is None
                        else s.gt_reflectance[oy:oy + crop, ox:ox + crop].copy()),
        meta=dict(s.meta))


def augment(s: SceneSample, cfg: TrainConfig, stream: Stream) -> SceneSample:
    if cfg.hflip and float(stream.uniform(1)[0]) < 0.5:
        s = hflip_sample(s)
    if cfg.crop_size:
        h, w = s.image.shape[1:]
        oy = int(stream.randint(1, 0, h - cfg.crop_size + 1)[0])
        ox = int(stream.randint(1, 0, w - cfg.crop_size + 1)[0])
        s = crop_sample(s, cfg.crop_size, oy, ox)
    return s


# -- forward / losses ---------------------------------------------------------------

def encode_batch(bundle: ModelBundle, samples: list[SceneSample]) -> SceneFeatures:
    dtype = next(iter(bundle.params.values())).data.dtype
    images = Tensor(np.stack([s.image for s in samples]).astype(dtype))
    base, feats = backbone_forward(bundle.enc_cfg, bundle.params, images,
                                   bundle.cfg.task)
    guide_feats = None
    if bundle.field_cfg.guide_dim:
        guides = Tensor(np.stack([s.guidance for s in samples]).astype(dtype))
        guide_feats = guidance_forward(bundle.enc_cfg, bundle.params, guides)
    return SceneFeatures(base=base, feats=feats, guide=guide_feats)


def point_coords(points: list[PointLabel], h: int, w: int) -> np.ndarray:
    """Annotation pixel centers in the shared (-1, 1) frame."""
    return np.array([[geometry.normalize_pixel(p.col, w),
                      geometry.normalize_pixel(p.row, h)] for p in points],
                    dtype=np.float64)


def pair_coords(pairs: list[ComparisonPair]) -> np.ndarray:
    """(2n, 2) endpoint coordinates, p1 rows first, then p2 rows."""
    pts = np.array([[p.p1 for p in pairs], [p.p2 for p in pairs]], dtype=np.float64)
    signed = 2.0 * pts.reshape(-1, 2) - 1.0
    return np.clip(signed, -_COORD_CAP, _COORD_CAP)


def field_task_values(bundle: ModelBundle, values: Tensor) -> Tensor:
    """Raw interpolated values -> task output domain.

    Learned-mode intrinsic values are squashed to a positive reflectance
    after interpolation; distance-mode values come from the already-squashed
    baseline map, and parsing values stay raw logits either way.
    """
    if bundle.cfg.task == "intrinsic" and bundle.field_cfg.weight_mode == "learned":
        return squash_reflectance(values)
    return values


def _zero() -> Tensor:
    return Tensor(np.zeros((), dtype=np.float32))


def compute_losses(bundle: ModelBundle, samples: list[SceneSample]
                   ) -> tuple[Tensor, Tensor]:
    """(field loss, auxiliary loss) for one batch."""
    cfg = bundle.cfg
    sf = encode_batch(bundle, samples)
    hb, wb = sf.feats.data.shape[2:]
    h, w = samples[0].image.shape[1:]

    if cfg.task == "parsing":
        coords, labels, scene_idx = [], [], []
        for si, s in enumerate(samples):
            pts = [p for p in s.annotations]
            if not pts:
                continue
            coords.append(point_coords(pts, h, w))
            labels.extend(p.label for p in pts)
            scene_idx.extend([si] * len(pts))
        if not coords:
            return _zero(), _zero()
        coords = np.concatenate(coords)
        labels = np.asarray(labels, dtype=np.int64)
        scene_idx = np.asarray(scene_idx, dtype=np.int64)
        out = field_mod.query(bundle.field_cfg, bundle.params, sf, scene_idx, coords)
        floss = ce_point_loss(field_task_values(bundle, out.values), labels)

        # auxiliary: baseline logits at the nearest backbone pixel
        fy = np.clip(np.rint(geometry.frac_index(coords[:, 1], hb)), 0, hb - 1)
        fx = np.clip(np.rint(geometry.frac_index(coords[:, 0], wb)), 0, wb - 1)
        flat = scene_idx * hb * wb + fy.astype(np.int64) * wb + fx.astype(np.int64)
        base_rows = gather_rows(flatten_maps(sf.base), flat)
        aloss = ce_point_loss(base_rows, labels)
        return floss, aloss

    coords, labels, weights, scene_idx = [], [], [], []
    for si, s in enumerate(samples):
        prs = [p for p in s.annotations]
        if not prs:
            continue
        coords.append(pair_coords(prs))
        labels.extend(int(p.label) for p in prs)
        weights.extend(p.weight for p in prs)
        scene_idx.append(np.full(2 * len(prs), si, dtype=np.int64))
    if not coords:
        return _zero(), _zero()
    npairs = len(labels)
    coords = np.concatenate(coords)
    labels = np.asarray(labels, dtype=np.int64)
    weights = np.asarray(weights, dtype=np.float64)
    scene_idx = np.concatenate(scene_idx)
    out = field_mod.query(bundle.field_cfg, bundle.params, sf, scene_idx, coords)
    refl = field_task_values(bundle, out.values)
    # per-sample layout: [p1 rows..., p2 rows...] per scene chunk
    r1_rows, r2_rows = [], []
    offset = 0
    for s in samples:
        k = len(s.annotations)
        if not k:
            continue
        r1_rows.extend(range(offset, offset + k))
        r2_rows.extend(range(offset + k, offset + 2 * k))
        offset += 2 * k
    r1 = gather_rows(refl, np.asarray(r1_rows)).reshape(npairs)
    r2 = gather_rows(refl, np.asarray(r2_rows)).reshape(npairs)
    floss = pair_loss_total(hinge_pair_losses(r1, r2, labels), weights)

    fy = geometry.frac_index(coords[:, 1], hb)
    fx = geometry.frac_index(coords[:, 0], wb)
    base_samples = bilinear_sample(sf.base, scene_idx, fy, fx)
    b1 = gather_rows(base_samples, np.asarray(r1_rows)).reshape(npairs)
    b2 = gather_rows(base_samples, np.asarray(r2_rows)).reshape(npairs)
    aloss = pair_loss_total(hinge_pair_losses(b1, b2, labels), weights)
    return floss, aloss


# -- evaluation ---------------------------------------------------------------------

def evaluate(bundle: ModelBundle, scenes: list[SceneSample]) -> dict:
    """Task metric for the field and for the baseline map, plus diagnostics."""
    cfg = bundle.cfg
    if not scenes:
        raise ContractError("evaluate needs at least one scene")
    distance_cfg = replace(bundle.field_cfg, guide_dim=0, weight_mode="distance")
    if cfg.task == "parsing":
        nc = cfg.classes
        conf = np.zeros((nc, nc), dtype=np.int64)
        conf_base = np.zeros((nc, nc), dtype=np.int64)
        with no_grad():
            for s in scenes:
                if s.gt_labels is None:
                    raise ContractError("parsing evaluation needs dense gt labels")
                sf = encode_batch(bundle, [s])
                gt_grid = geometry.GridSpec(*s.gt_labels.shape)
                logits = field_mod.render(bundle.field_cfg, bundle.params, sf, gt_grid)
                pred = np.argmax(logits.data, axis=0).astype(np.int64)
                conf += confusion_matrix(pred, s.gt_labels, nc)
                base_logits = field_mod.render(distance_cfg, {}, sf, gt_grid)
                pred_b = np.argmax(base_logits.data, axis=0).astype(np.int64)
                conf_base += confusion_matrix(pred_b, s.gt_labels, nc)
        m, per_class = miou_from_confusion(conf)
        mb, _ = miou_from_confusion(conf_base)
        return {"task": "parsing", "dpf_miou": m, "baseline_miou": mb,
                "per_class_iou": per_class, "scenes": len(scenes)}

    labels_all, weights_all, pred_all, pred_base_all = [], [], [], []
    with no_grad():
        for s in scenes:
            prs = list(s.annotations)
            if not prs:
                continue
            coords = pair_coords(prs)
            sf = encode_batch(bundle, [s])
            sidx = np.zeros(len(coords), dtype=np.int64)
            out = field_mod.query(bundle.field_cfg, bundle.params, sf, sidx, coords)
            refl = field_task_values(bundle, out.values).data.reshape(-1)
            n = len(prs)
            pred_all.append(classify_pairs(refl[:n], refl[n:]))
            hb, wb = sf.feats.data.shape[2:]
            fy = geometry.frac_index(coords[:, 1], hb)
            fx = geometry.frac_index(coords[:, 0], wb)
            base_r = bilinear_sample(sf.base, sidx, fy, fx).data.reshape(-1)
            pred_base_all.append(classify_pairs(base_r[:n], base_r[n:]))
            labels_all.extend(int(p.label) for p in prs)
            weights_all.extend(p.weight for p in prs)
    if not labels_all:
        raise ContractError("no comparison pairs to evaluate")
    labels = np.asarray(labels_all)
    weights = np.asarray(weights_all, dtype=np.float64)
    rep = whdr(labels, weights, np.concatenate(pred_all))
    rep_base = whdr(labels, weights, np.concatenate(pred_base_all))
    return {"task": "intrinsic", "dpf_whdr": rep.whdr,
            "baseline_whdr": rep_base.whdr, "total_weight": rep.total_weight,
            "scenes": len(scenes)}


def metric_of(report: dict) -> float:
    return report["dpf_miou"] if report["task"] == "parsing" else report["dpf_whdr"]


# -- training loop -------------------------------------------------------------------

def _checkpoint_tensors(bundle: ModelBundle) -> dict[str, np.ndarray]:
    return {name: p.data for name, p in bundle.params.items()}


def save_model(path: str, bundle: ModelBundle):
    save_checkpoint(path, _checkpoint_tensors(bundle), bundle.cfg.digest(),
                    bundle.cfg.seed)
    save_config(path + ".json", bundle.cfg)


def load_model(path: str) -> ModelBundle:
    """Rebuild a model from a checkpoint plus its config sidecar."""
    sidecar = path + ".json"
    try:
        with open(sidecar, "r", encoding="utf-8") as f:
            cfg = config_from_obj(json.load(f))
    except FileNotFoundError as exc:
        raise SchemaError(f"missing config sidecar {sidecar}") from exc
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{sidecar}: invalid JSON ({exc})") from exc
    tensors, digest, _seed = load_checkpoint(path, expected_digest=cfg.digest())
    bundle = build_model(cfg)
    for name, p in bundle.params.items():
        if name not in tensors:
            raise ContractError(f"checkpoint missing tensor {name!r}")
        if tensors[name].shape != p.data.shape:
            raise ContractError(f"checkpoint tensor {name!r} has shape "
                                f"{tensors[name].shape}, expected {p.data.shape}")
        p.data = tensors[name].astype(np.float32)
    return bundle


def train(cfg: TrainConfig, log=None) -> TrainResult:
    """Full training run; returns the trained bundle, run log, and report."""
    log = log or (lambda msg: None)
    set_backend(cfg.backend)
    bundle = build_model(cfg)
    optim = OptimState(bundle.param_list, momentum=cfg.momentum,
                       weight_decay=cfg.weight_decay)
    scenes, split, ids = make_dataset(cfg)
    pos = {sid: k for k, sid in enumerate(ids)}
    train_scenes = [scenes[pos[sid]] for sid in split.train]
    test_scenes = [scenes[pos[sid]] for sid in split.test]
    if not train_scenes:
        raise ContractError("empty training split")

    out_dir = cfg.out_dir
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
    epochs_log: list[dict] = []
    last_good = os.path.join(out_dir, "checkpoint_last.dpf") if out_dir else None

    for epoch in range(cfg.max_epochs):
        t0 = time.perf_counter()
        lr = poly_lr(cfg.base_lr, epoch, cfg.max_epochs, cfg.lr_power)
        order = substream(cfg.seed, "epoch", epoch, "shuffle").permutation(
            len(train_scenes))
        aug_stream = substream(cfg.seed, "epoch", epoch, "augment")
        f_sum = a_sum = 0.0
        steps = 0
        try:
            for lo in range(0, len(order), cfg.batch_size):
                batch = [augment(train_scenes[i], cfg, aug_stream)
                         for i in order[lo:lo + cfg.batch_size]]
                floss, aloss = compute_losses(bundle, batch)
                loss = total_loss(floss, aloss, cfg.lambda_aux)
                if not np.isfinite(loss.data).all():
                    raise NumericsError(f"non-finite loss at epoch {epoch}")
                loss.backward()
                sgd_step(bundle.param_list, optim, lr)
                zero_grads(bundle.param_list)
                f_sum += float(floss.data)
                a_sum += float(aloss.data)
                steps += 1
        except NumericsError:
            log(f"aborting at epoch {epoch}; last-good checkpoint: {last_good}")
            raise
        record = {"epoch": epoch, "lr": lr,
                  "loss_field": f_sum / max(steps, 1),
                  "loss_aux": a_sum / max(steps, 1),
                  "metric": None}
        due = cfg.eval_every and (epoch + 1) % cfg.eval_every == 0
        if due and test_scenes:
            record["metric"] = metric_of(evaluate(bundle, test_scenes))
        epochs_log.append(record)
        wall = time.perf_counter() - t0
        log(f"epoch {epoch}: lr {lr:.6f} field {record['loss_field']:.5f} "
            f"aux {record['loss_aux']:.5f} metric {record['metric']} "
            f"({wall:.2f}s)")
        if out_dir:
            save_model(last_good, bundle)
            if cfg.checkpoint_every and (epoch + 1) % cfg.checkpoint_every == 0:
                save_model(os.path.join(out_dir, f"checkpoint_epoch{epoch:04d}.dpf"),
                           bundle)

    report = evaluate(bundle, test_scenes) if test_scenes else {}
    if report:
        epochs_log[-1]["metric"] = metric_of(report)
    runlog = {"config_digest": f"{cfg.digest():#018x}", "epochs": epochs_log,
              "final_report": report}
    ckpt_path = None
    if out_dir:
        ckpt_path = os.path.join(out_dir, "checkpoint.dpf")
        save_model(ckpt_path, bundle)
        with open(os.path.join(out_dir, "runlog.json"), "w", encoding="utf-8") as f:
            json.dump(runlog, f, indent=1, sort_keys=True)
            f.write("\n")
    return TrainResult(bundle=bundle, runlog=runlog, report=report,
                       checkpoint_path=ckpt_path)


# -- CLI-facing operations -------------------------------------------------------------

def evaluate_checkpoint(ckpt_path: str, data_dir: str) -> dict:
    bundle = load_model(ckpt_path)
    set_backend(bundle.cfg.backend)
    cfg = replace(bundle.cfg, data_dir=data_dir)
    scenes, split, ids = make_dataset(cfg)
    pos = {sid: k for k, sid in enumerate(ids)}
    return evaluate(bundle, [scenes[pos[sid]] for sid in split.test])


def render_to_file(ckpt_path: str, image_path: str, guidance_path: str,
                   out_path: str, resolution: tuple[int, int] | None = None):
    from .data_io.images import load_image, save_label_map

    bundle = load_model(ckpt_path)
    set_backend(bundle.cfg.backend)
    image = load_image(image_path)
    guide = load_image(guidance_path)
    sample = SceneSample(image=image, guidance=guide, annotations=[],
                         gt_labels=None, gt_reflectance=None)
    if resolution is None:
        resolution = guide.shape[1:]
    grid = geometry.GridSpec(int(resolution[0]), int(resolution[1]))
    with no_grad():
        sf = encode_batch(bundle, [sample])
        values = field_mod.render(bundle.field_cfg, bundle.params, sf, grid)
        values = field_task_values(bundle, values)
    if bundle.cfg.task == "parsing":
        save_label_map(out_path, np.argmax(values.data, axis=0).astype(np.uint8))
    else:
        refl = np.clip(values.data[0], 0.0, 1.0)
        save_label_map(out_path, np.floor(refl * 255.0 + 0.5).astype(np.uint8))


def run_gradcheck(task: str, probes: int = 60, seed: int = 0,
                  corrupt: tuple[str, float] | None = None) -> GradCheckResult:
    """End-to-end finite-difference check on a tiny model in float64.

    8x8 scene, 2x2 backbone grid, guidance attached, auxiliary loss active:
    the probed path covers encoders, interpolation field, and task losses.
    """
    cfg = TrainConfig(task=task, seed=seed, synth_scenes=1, synth_resolution=8,
                      synth_guidance_scale=2, synth_regions=3, classes=3,
                      synth_levels=2, synth_points=4, synth_pairs=4,
                      backbone_widths=(4, 6), downsample=4, guide_blocks=1,
                      guide_width=4, mlp_hidden=(16, 16), split_rule="none")
    bundle = build_model(cfg)
    params64 = cast_params(bundle.param_list, np.float64)
    bundle64 = ModelBundle(cfg=cfg, enc_cfg=bundle.enc_cfg,
                           field_cfg=bundle.field_cfg,
                           params={p.name: p for p in params64})
    scene = generate_scene(synthetic_config(cfg), cfg.seed, 1)

    def closure():
        floss, aloss = compute_losses(bundle64, [scene])
        return total_loss(floss, aloss, cfg.lambda_aux)

    return grad_check(closure, params64, probes, seed=seed, corrupt=corrupt)


def trend_experiment(cfg: TrainConfig, log=None) -> dict:
    """Train one model per (guidance scale, seed) cell and tabulate metrics."""
    log = log or (lambda msg: None)
    scales = cfg.trend_guidance_scales or (cfg.synth_guidance_scale,)
    seeds = cfg.trend_seeds or (cfg.seed,)
    if list(scales) != sorted(scales):
        raise ContractError("trend guidance scales must be ascending")
    rows = []
    for scale in scales:
        for seed in seeds:
            run_cfg = replace(cfg, synth_guidance_scale=scale, seed=seed,
                              trend_guidance_scales=(), trend_seeds=(), out_dir="")
            result = train(run_cfg, log=None)
            metric = metric_of(result.report)
            rows.append({"guidance_scale": scale,
                         "guidance_resolution": scale * cfg.synth_resolution,
                         "input_resolution": cfg.synth_resolution,
                         "seed": seed, "metric": metric})
            log(f"guidance x{scale} seed {seed}: metric {metric:.4f}")
    means = {}
    for scale in scales:
        vals = [r["metric"] for r in rows if r["guidance_scale"] == scale]
        means[scale] = float(np.mean(vals))
    return {"rows": rows, "mean_by_scale": {str(k): v for k, v in means.items()},
            "metric": "miou" if cfg.task == "parsing" else "whdr"}
