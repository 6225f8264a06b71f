"""On-disk dataset layout.

A dataset directory holds a manifest plus, per scene id i (1-based):

    {i:05d}.ppm         input image
    {i:05d}_guide.ppm   guidance image (same scene, possibly larger)
    {i:05d}_ann.json    annotations (points or comparisons)
    {i:05d}_gt.pgm      dense ground truth: class indices for parsing,
                        quantized reflectance (diagnostic only) for intrinsic

manifest.json records the task and generator settings.  Images are stored
quantized to bytes, so training from a directory is deterministic but not
bit-identical to training from in-memory synthetic scenes.
"""

from __future__ import annotations

import json
import os

import numpy as np

from ..errors import SchemaError
from .annotations import load_annotations, save_annotations
from .images import load_image, load_label_map, save_image, save_label_map
from .synthetic import SceneSample, SyntheticConfig, generate_scene

MANIFEST = "manifest.json"


def scene_paths(root: str, scene_id: int) -> dict[str, str]:
    stem = os.path.join(root, f"{scene_id:05d}")
    return {"image": f"{stem}.ppm", "guide": f"{stem}_guide.ppm",
            "ann": f"{stem}_ann.json", "gt": f"{stem}_gt.pgm"}


def write_dataset(cfg: SyntheticConfig, seed: int, out_dir: str, count: int) -> list[int]:
    os.makedirs(out_dir, exist_ok=True)
    ids = list(range(1, count + 1))
    for i in ids:
        scene = generate_scene(cfg, seed, i)
        paths = scene_paths(out_dir, i)
        save_image(paths["image"], scene.image)
        save_image(paths["guide"], scene.guidance)
        save_annotations(paths["ann"], scene.annotations,
                         kind="points" if cfg.task == "parsing" else "comparisons")
        if cfg.task == "parsing":
            save_label_map(paths["gt"], scene.gt_labels)
        else:
            save_label_map(paths["gt"], np.floor(scene.gt_reflectance * 255.0 + 0.5))
    manifest = {"task": cfg.task, "resolution": cfg.resolution,
                "guidance_scale": cfg.guidance_scale, "regions": cfg.regions,
                "classes": cfg.classes, "levels": cfg.levels,
                "seed": seed, "count": count, "format_version": 1}
    with open(os.path.join(out_dir, MANIFEST), "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=1, sort_keys=True)
        f.write("\n")
    return ids


def read_manifest(root: str) -> dict:
    path = os.path.join(root, MANIFEST)
    try:
        with open(path, "r", encoding="utf-8") as f:
            manifest = json.load(f)
    except FileNotFoundError as exc:
        raise SchemaError(f"{root}: missing {MANIFEST}") from exc
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON ({exc})") from exc
    for key in ("task", "count", "resolution"):
        if key not in manifest:
            raise SchemaError(f"{path}: manifest missing {key!r}")
    return manifest


def load_dataset(root: str) -> tuple[dict, list[int], list[SceneSample]]:
    """Returns (manifest, ids, scenes); scene order follows ascending id."""
    manifest = read_manifest(root)
    ids = list(range(1, int(manifest["count"]) + 1))
    scenes = []
    for i in ids:
        paths = scene_paths(root, i)
        image = load_image(paths["image"])
        guide = load_image(paths["guide"])
        ann = load_annotations(paths["ann"])
        gt_labels = gt_refl = None
        if os.path.exists(paths["gt"]):
            raw = load_label_map(paths["gt"])
            if manifest["task"] == "parsing":
                gt_labels = raw
            else:
                gt_refl = raw.astype(np.float32) / 255.0
        scenes.append(SceneSample(image=image, guidance=guide, annotations=ann,
                                  gt_labels=gt_labels, gt_reflectance=gt_refl,
                                  meta={"id": i}))
    return manifest, ids, scenes
