"""Convolutional encoders.

``backbone_forward`` runs a small strided conv stack and returns both the
penultimate feature map and the baseline prediction produced from it by a
1x1 head.  ``guidance_forward`` runs a stride-1 residual stack over the
guidance image, so its features keep the guidance resolution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autograd import Parameter, Tensor, conv2d
from .errors import ContractError
from .nn import kaiming_uniform

# squash bounds for the reflectance output channel; ratio losses need
# values strictly above zero
REFLECTANCE_FLOOR = 1e-3


@dataclass(frozen=True)
class EncoderConfig:
    backbone_widths: tuple[int, ...] = (16, 32, 32, 64)
    downsample: int = 4
    guide_blocks: int = 4
    guide_width: int = 32

    def __post_init__(self):
        if any(w < 1 for w in self.backbone_widths):
            raise ContractError("backbone widths must be >= 1")
        d, n2 = self.downsample, 0
        while d % 2 == 0 and d > 1:
            d //= 2
            n2 += 1
        if d != 1 or n2 > len(self.backbone_widths):
            raise ContractError(
                f"downsample must be a power of two expressible in "
                f"{len(self.backbone_widths)} stages, got {self.downsample}")
        if self.guide_width < 0 or self.guide_blocks < 1:
            raise ContractError("bad guidance encoder config")

    @property
    def strides(self) -> tuple[int, ...]:
        n2 = self.downsample.bit_length() - 1
        return tuple(2 if i < n2 else 1 for i in range(len(self.backbone_widths)))

    @property
    def feature_dim(self) -> int:
        return self.backbone_widths[-1]


def _conv_param(name: str, c_out: int, c_in: int, k: int, seed: int) -> Parameter:
    return Parameter(kaiming_uniform((c_out, c_in, k, k), c_in * k * k, seed, name), name)


def _bias_param(name: str, c_out: int) -> Parameter:
    return Parameter(np.zeros(c_out, dtype=np.float32), name)


def init_backbone_params(cfg: EncoderConfig, out_channels: int, seed: int,
                         in_channels: int = 3) -> dict[str, Parameter]:
    params: dict[str, Parameter] = {}
    c_in = in_channels
    for i, width in enumerate(cfg.backbone_widths):
        params[f"backbone.conv{i}.w"] = _conv_param(f"backbone.conv{i}.w", width, c_in, 3, seed)
        params[f"backbone.conv{i}.b"] = _bias_param(f"backbone.conv{i}.b", width)
        c_in = width
    params["backbone.head.w"] = _conv_param("backbone.head.w", out_channels, c_in, 1, seed)
    params["backbone.head.b"] = _bias_param("backbone.head.b", out_channels)
    return params


def squash_reflectance(t: Tensor) -> Tensor:
    """Map raw scores into [REFLECTANCE_FLOOR, 1] through a sigmoid."""
    return t.sigmoid() * (1.0 - REFLECTANCE_FLOOR) + REFLECTANCE_FLOOR


def backbone_forward(cfg: EncoderConfig, params: dict[str, Parameter],
                     image: Tensor, task: str) -> tuple[Tensor, Tensor]:
    """Returns (base prediction, feature map), both at 1/downsample resolution.

    The base prediction holds class logits for parsing and a squashed
    positive reflectance channel for the intrinsic task.
    """
    if image.data.ndim != 4 or image.data.shape[1] != params["backbone.conv0.w"].data.shape[1]:
        raise ContractError(f"backbone expects (B,{params['backbone.conv0.w'].data.shape[1]},H,W), "
                            f"got {image.data.shape}")
    h, w = image.data.shape[2:]
    if h % cfg.downsample or w % cfg.downsample:
        raise ContractError(f"image dims {h}x{w} not divisible by downsample {cfg.downsample}")
    if min(h, w) < cfg.downsample:
        raise ContractError("image smaller than the downsampling factor")
    feats = image
    for i, stride in enumerate(cfg.strides):
        feats = conv2d(feats, params[f"backbone.conv{i}.w"], params[f"backbone.conv{i}.b"],
                       stride=stride, pad=1).relu()
    base = conv2d(feats, params["backbone.head.w"], params["backbone.head.b"],
                  stride=1, pad=0)
    if task == "intrinsic":
        base = squash_reflectance(base)
    return base, feats


def init_guidance_params(cfg: EncoderConfig, seed: int,
                         in_channels: int = 3) -> dict[str, Parameter]:
    if cfg.guide_width == 0:
        return {}
    params: dict[str, Parameter] = {
        "guide.stem.w": _conv_param("guide.stem.w", cfg.guide_width, in_channels, 3, seed),
        "guide.stem.b": _bias_param("guide.stem.b", cfg.guide_width),
    }
    for i in range(cfg.guide_blocks):
        for j in (0, 1):
            name = f"guide.block{i}.conv{j}"
            params[f"{name}.w"] = _conv_param(f"{name}.w", cfg.guide_width, cfg.guide_width, 3, seed)
            params[f"{name}.b"] = _bias_param(f"{name}.b", cfg.guide_width)
    return params


def guidance_forward(cfg: EncoderConfig, params: dict[str, Parameter],
                     guide: Tensor) -> Tensor:
    """Residual stack at stride 1; output spatial shape equals the input's."""
    if cfg.guide_width == 0:
        raise ContractError("guidance encoder disabled (guide_width = 0)")
    if guide.data.ndim != 4:
        raise ContractError(f"guidance expects (B,C,H,W), got {guide.data.shape}")
    if min(guide.data.shape[2:]) < 8:
        raise ContractError("guidance image must be at least 8x8")
    h = conv2d(guide, params["guide.stem.w"], params["guide.stem.b"], stride=1, pad=1)
    for i in range(cfg.guide_blocks):
        branch = conv2d(h, params[f"guide.block{i}.conv0.w"],
                        params[f"guide.block{i}.conv0.b"], stride=1, pad=1).relu()
        branch = conv2d(branch, params[f"guide.block{i}.conv1.w"],
                        params[f"guide.block{i}.conv1.b"], stride=1, pad=1)
        h = h + branch
    return h
