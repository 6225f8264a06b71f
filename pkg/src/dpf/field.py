"""The implicit prediction field.

A query at a continuous coordinate resolves to the 4 pixels of its cell on
the backbone feature grid.  In ``learned`` mode a shared MLP maps each
neighbor's backbone feature row, guidance feature row (sampled at the
neighbor's coordinate on the guidance grid), and the frequency-encoded
offset to one weight logit plus a value vector; the four logits pass
through a softmax and the output is the weight-averaged value.  In
``distance`` mode the MLP is bypassed: weights are the bilinear
coefficients and values are read from the baseline prediction map, which
makes the field exactly classical bilinear upsampling of that map.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import geometry
from .autograd import Tensor, bilinear_sample, concat, gather_rows, softmax, assert_finite
from .errors import ContractError
from .nn import MlpConfig, init_mlp_params, mlp_forward

WEIGHT_MODES = ("learned", "distance")


@dataclass(frozen=True)
class FieldConfig:
    value_dim: int
    feature_dim: int                 # backbone feature channels
    guide_dim: int                   # guidance feature channels; 0 disables guidance
    mlp_hidden: tuple[int, ...] = (256, 256)
    pos_levels: int = 9
    weight_mode: str = "learned"

    def __post_init__(self):
        if self.value_dim < 1:
            raise ContractError("value_dim must be >= 1")
        if self.weight_mode not in WEIGHT_MODES:
            raise ContractError(f"weight_mode must be one of {WEIGHT_MODES}")

    @property
    def pos_cfg(self) -> geometry.PosEncodingConfig:
        return geometry.PosEncodingConfig(self.pos_levels)

    @property
    def mlp(self) -> MlpConfig:
        return MlpConfig(
            input_dim=self.feature_dim + self.guide_dim + self.pos_cfg.dim_2d,
            hidden_dims=self.mlp_hidden,
            output_dim=self.value_dim + 1,
        )


@dataclass
class SceneFeatures:
    """Encoder outputs for a batch of scenes."""

    base: Tensor    # (B, c, Hb, Wb) baseline prediction
    feats: Tensor   # (B, d_feat, Hb, Wb)
    guide: Tensor | None  # (B, d_guide, Hg, Wg) or None when guidance is off

    @property
    def grid(self) -> geometry.GridSpec:
        return geometry.GridSpec(self.feats.data.shape[2], self.feats.data.shape[3])


@dataclass
class FieldOutput:
    values: Tensor            # (n, c) interpolated values (raw; task squash is downstream)
    weights: Tensor           # (n, 4) simplex weights
    neighbor_values: Tensor   # (n, 4, c)
    neighbor_rows: np.ndarray  # (n, 4) int64
    neighbor_cols: np.ndarray  # (n, 4) int64


def init_field_params(cfg: FieldConfig, seed: int) -> dict:
    if cfg.weight_mode == "distance":
        return {}
    return init_mlp_params(cfg.mlp, seed, "field")


def flatten_maps(maps: Tensor) -> Tensor:
    """(B, C, H, W) -> (B*H*W, C) row matrix."""
    b, c, h, w = maps.data.shape
    return maps.permute(0, 2, 3, 1).reshape(b * h * w, c)


def gather_codes(scene_feats: SceneFeatures, scene_idx: np.ndarray,
                 rows: np.ndarray, cols: np.ndarray
                 ) -> tuple[Tensor, Tensor | None]:
    """Per-neighbor latent rows for (n, 4) neighbor indices.

    Backbone features are read directly at the neighbor's grid index;
    guidance features are bilinearly sampled at the neighbor's coordinate
    in the shared continuous frame (the guidance grid has its own
    resolution).  Returns (n*4, d_feat) and (n*4, d_guide) row blocks in
    query-major order.
    """
    grid = scene_feats.grid
    flat_idx = (np.asarray(scene_idx)[:, None] * grid.height * grid.width
                + rows * grid.width + cols).reshape(-1)
    feat_rows = gather_rows(flatten_maps(scene_feats.feats), flat_idx)
    guide_rows = None
    if scene_feats.guide is not None:
        hg, wg = scene_feats.guide.data.shape[2:]
        ncx = (2.0 * cols + 1.0) / grid.width - 1.0   # neighbor centers, shared frame
        ncy = (2.0 * rows + 1.0) / grid.height - 1.0
        fy = geometry.frac_index(ncy.reshape(-1), hg)
        fx = geometry.frac_index(ncx.reshape(-1), wg)
        guide_rows = bilinear_sample(scene_feats.guide,
                                     np.repeat(np.asarray(scene_idx), 4), fy, fx)
    return feat_rows, guide_rows


def query(cfg: FieldConfig, params: dict, scene_feats: SceneFeatures,
          scene_idx: np.ndarray, coords: np.ndarray) -> FieldOutput:
    """Evaluate the field at ``coords`` (n, 2), each against its scene's maps."""
    coords = np.asarray(coords, dtype=np.float64)
    scene_idx = np.asarray(scene_idx, dtype=np.int64)
    if coords.ndim != 2 or coords.shape[0] != scene_idx.shape[0]:
        raise ContractError("coords must be (n, 2) with one scene index per row")
    grid = scene_feats.grid
    n = coords.shape[0]
    rows, cols, deltas, bil_w = geometry.neighbors_batch(coords, grid)
    dtype = scene_feats.feats.data.dtype

    if cfg.weight_mode == "distance":
        c = scene_feats.base.data.shape[1]
        flat_idx = (scene_idx[:, None] * grid.height * grid.width
                    + rows * grid.width + cols).reshape(-1)
        vals = gather_rows(flatten_maps(scene_feats.base), flat_idx).reshape(n, 4, c)
        weights = Tensor(bil_w.astype(dtype))
        out_vals = (weights.reshape(n, 4, 1) * vals).sum(axis=1)
        return FieldOutput(out_vals, weights, vals, rows, cols)

    if scene_feats.feats.data.shape[1] != cfg.feature_dim:
        raise ContractError("feature map width does not match field config")
    if cfg.guide_dim and scene_feats.guide is None:
        raise ContractError("field config expects guidance features")
    feat_rows, guide_rows = gather_codes(scene_feats, scene_idx, rows, cols)
    pieces = [feat_rows]
    if cfg.guide_dim:
        pieces.append(guide_rows)
    pieces.append(Tensor(geometry.pos_encode(deltas.reshape(-1, 2), cfg.pos_cfg, dtype)))
    mlp_in = concat(pieces, axis=1)
    out = mlp_forward(cfg.mlp, params, mlp_in, "field")
    assert_finite(out, "field MLP output")
    out = out.reshape(n, 4, cfg.value_dim + 1)
    weights = softmax(out[:, :, 0], axis=1)
    vals = out[:, :, 1:]
    out_vals = (weights.reshape(n, 4, 1) * vals).sum(axis=1)
    return FieldOutput(out_vals, weights, vals, rows, cols)


def render(cfg: FieldConfig, params: dict, scene_feats: SceneFeatures,
           out_grid: geometry.GridSpec, chunk: int = 8192) -> Tensor:
    """Evaluate one scene's field at every pixel center of ``out_grid``.

    Output resolution is arbitrary: it need not match the backbone grid or
    the guidance grid.  Returns (c, H_out, W_out).
    """
    if scene_feats.feats.data.shape[0] != 1:
        raise ContractError("render expects single-scene features")
    xs = geometry.pixel_centers(out_grid.width)
    ys = geometry.pixel_centers(out_grid.height)
    gx, gy = np.meshgrid(xs, ys)
    coords = np.stack([gx.reshape(-1), gy.reshape(-1)], axis=1)
    chunks = []
    for lo in range(0, coords.shape[0], chunk):
        part = coords[lo:lo + chunk]
        out = query(cfg, params, scene_feats, np.zeros(len(part), dtype=np.int64), part)
        chunks.append(out.values)
    values = concat(chunks, axis=0) if len(chunks) > 1 else chunks[0]
    c = values.data.shape[1]
    return values.reshape(out_grid.height, out_grid.width, c).permute(2, 0, 1)


def inspect_weights(cfg: FieldConfig, params: dict, scene_feats: SceneFeatures,
                    coord) -> tuple[np.ndarray, np.ndarray]:
    """Softmaxed interpolation weights and (row, col) indices for one query."""
    out = query(cfg, params, scene_feats,
                np.zeros(1, dtype=np.int64), np.asarray([coord], dtype=np.float64))
    indices = np.stack([out.neighbor_rows[0], out.neighbor_cols[0]], axis=1)
    return out.weights.data[0].copy(), indices

