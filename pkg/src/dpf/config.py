"""Run configuration: a flat, strictly validated JSON key set.

Unknown keys are rejected so experiment typos fail loudly; keys starting
with an underscore and the "notes" key are reserved for human commentary
and ignored by the loader.  Per-task defaults follow the training recipe
(poly schedule power 0.9, momentum 0.9, weight decay 1e-4; base rate and
epoch count depend on the task); the desk-scale experiment configs shipped
with the tests override them and record why in their "notes".
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Any

from .errors import SchemaError
from .rng import fnv1a64

_TASKS = ("parsing", "intrinsic")
_TASK_DEFAULT_LR = {"parsing": 0.028, "intrinsic": 0.007}
_TASK_DEFAULT_EPOCHS = {"parsing": 70, "intrinsic": 30}


@dataclass
class TrainConfig:
    task: str = "parsing"
    seed: int = 0
    base_lr: float | None = None        # None -> per-task default
    max_epochs: int | None = None       # None -> per-task default
    lr_power: float = 0.9
    momentum: float = 0.9
    weight_decay: float = 0.0001
    batch_size: int = 2
    lambda_aux: float = 1.0
    weight_mode: str = "learned"
    use_guidance: bool = True
    hflip: bool = False
    crop_size: int = 0                  # 0 disables random crop
    eval_every: int = 0                 # 0 -> evaluate at the final epoch only
    checkpoint_every: int = 0           # 0 -> final checkpoint only
    backend: str = "auto"               # kernel backend: auto|numpy|cython
    out_dir: str = ""
    data_dir: str = ""
    split_rule: str = "every_fifth"     # every_fifth | none (train = test = all)
    # model
    classes: int = 4
    backbone_widths: tuple[int, ...] = (16, 32, 32, 64)
    downsample: int = 4
    guide_blocks: int = 4
    guide_width: int = 32
    mlp_hidden: tuple[int, ...] = (256, 256)
    pos_levels: int = 9
    # inline synthetic dataset (used when data_dir is empty)
    synth_scenes: int = 0
    synth_resolution: int = 64
    synth_guidance_scale: int = 1
    synth_regions: int = 5
    synth_levels: int = 3
    synth_points: int = 8
    synth_pairs: int = 30
    synth_noise: float = 0.02
    synth_label_noise: float = 0.0
    synth_gt_scale: int = 1
    synth_master_scale: int = 4
    synth_context_classes: bool = False
    # trend experiment
    trend_guidance_scales: tuple[int, ...] = ()
    trend_seeds: tuple[int, ...] = ()

    def __post_init__(self):
        if self.task not in _TASKS:
            raise SchemaError(f"task must be one of {_TASKS}, got {self.task!r}")
        if self.base_lr is None:
            self.base_lr = _TASK_DEFAULT_LR[self.task]
        if self.max_epochs is None:
            self.max_epochs = _TASK_DEFAULT_EPOCHS[self.task]
        if self.base_lr <= 0 or self.lr_power <= 0:
            raise SchemaError("base_lr and lr_power must be positive")
        if self.max_epochs < 1 or self.batch_size < 1:
            raise SchemaError("max_epochs and batch_size must be >= 1")
        if self.weight_mode not in ("learned", "distance"):
            raise SchemaError(f"bad weight_mode {self.weight_mode!r}")
        if self.split_rule not in ("every_fifth", "none"):
            raise SchemaError(f"bad split_rule {self.split_rule!r}")
        if self.backend not in ("auto", "numpy", "cython"):
            raise SchemaError(f"bad backend {self.backend!r}")
        if not 0 <= self.seed < 2 ** 64:
            raise SchemaError("seed must fit in u64")
        if self.crop_size < 0:
            raise SchemaError("crop_size must be >= 0")
        if not self.data_dir and self.synth_scenes < 1:
            raise SchemaError("provide data_dir or synth_scenes >= 1")
        for name in ("backbone_widths", "mlp_hidden", "trend_guidance_scales",
                     "trend_seeds"):
            value = getattr(self, name)
            if not isinstance(value, tuple):
                if not isinstance(value, list) or not all(isinstance(v, int) for v in value):
                    raise SchemaError(f"{name} must be a list of integers")
                setattr(self, name, tuple(value))

    @property
    def value_dim(self) -> int:
        return self.classes if self.task == "parsing" else 1

    @property
    def effective_guide_width(self) -> int:
        return self.guide_width if self.use_guidance else 0

    def to_obj(self) -> dict[str, Any]:
        obj = asdict(self)
        for k, v in obj.items():
            if isinstance(v, tuple):
                obj[k] = list(v)
        return obj

    def digest(self) -> int:
        """64-bit fingerprint of the run-defining config keys.

        Output location and logging cadence do not change the trained
        model, so they are excluded; identical runs into different
        directories produce byte-identical checkpoints.
        """
        obj = self.to_obj()
        for key in ("out_dir", "eval_every", "checkpoint_every"):
            obj.pop(key)
        canon = json.dumps(obj, sort_keys=True, separators=(",", ":"))
        return fnv1a64(canon.encode("utf-8"))


def config_from_obj(obj: dict[str, Any]) -> TrainConfig:
    if not isinstance(obj, dict):
        raise SchemaError("config must be a JSON object")
    known = set(TrainConfig.__dataclass_fields__)
    clean: dict[str, Any] = {}
    for key, value in obj.items():
        if key == "notes" or key.startswith("_"):
            continue
        if key not in known:
            raise SchemaError(f"unknown config key {key!r}")
        clean[key] = value
    try:
        return TrainConfig(**clean)
    except TypeError as exc:
        raise SchemaError(f"bad config value: {exc}") from exc


def load_config(path: str) -> TrainConfig:
    with open(path, "r", encoding="utf-8") as f:
        try:
            obj = json.load(f)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: invalid JSON ({exc})") from exc
    return config_from_obj(obj)


def save_config(path: str, cfg: TrainConfig):
    with open(path, "w", encoding="utf-8") as f:
        json.dump(cfg.to_obj(), f, indent=1, sort_keys=True)
        f.write("\n")
