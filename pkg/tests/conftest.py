import numpy as np
import pytest

from dpf.autograd import Tensor
from dpf.encoders import (EncoderConfig, backbone_forward, guidance_forward,
                          init_backbone_params, init_guidance_params)
from dpf.field import FieldConfig, SceneFeatures, init_field_params


@pytest.fixture
def tiny_scene_features():
    """Small random encoder outputs shared by field tests."""
    def make(seed=0, task="parsing", value_dim=3, with_guide=True,
             img_hw=(8, 8), guide_hw=(16, 16), batch=1):
        enc = EncoderConfig(backbone_widths=(4, 6), downsample=4,
                            guide_blocks=1, guide_width=4 if with_guide else 0)
        params = init_backbone_params(enc, value_dim, seed)
        rng = np.random.default_rng(seed)
        img = Tensor(rng.normal(size=(batch, 3, *img_hw)).astype(np.float32))
        base, feats = backbone_forward(enc, params, img, task)
        guide_feats = None
        if with_guide:
            params.update(init_guidance_params(enc, seed))
            guide = Tensor(rng.normal(size=(batch, 3, *guide_hw)).astype(np.float32))
            guide_feats = guidance_forward(enc, params, guide)
        return SceneFeatures(base, feats, guide_feats), params, enc
    return make


def make_field(value_dim=3, feature_dim=6, guide_dim=4, hidden=(16, 16),
               levels=2, mode="learned", seed=0):
    cfg = FieldConfig(value_dim=value_dim, feature_dim=feature_dim,
                      guide_dim=guide_dim, mlp_hidden=hidden,
                      pos_levels=levels, weight_mode=mode)
    return cfg, init_field_params(cfg, seed)
