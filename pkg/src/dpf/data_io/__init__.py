"""File formats, dataset splits, synthetic scenes, and checkpoints."""

from .annotations import load_annotations, save_annotations
from .checkpoint import load_checkpoint, save_checkpoint
from .images import (load_image, load_label_map, read_netpbm, save_image,
                     save_label_map, write_netpbm)
from .splits import DatasetSplit, split_every_fifth
from .synthetic import SceneSample, SyntheticConfig, generate_scene

__all__ = [
    "DatasetSplit", "SceneSample", "SyntheticConfig",
    "generate_scene", "load_annotations", "load_checkpoint", "load_image",
    "load_label_map", "read_netpbm", "save_annotations", "save_checkpoint",
    "save_image", "save_label_map", "split_every_fifth", "write_netpbm",
]
